#include "gandetect/errors.hpp"

namespace gandetect {

TrainingError::TrainingError(const std::string& what, int epoch, int batch)
    : Error(what + " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ")"),
      epoch_(epoch),
      batch_(batch) {}

}  // namespace gandetect
