#include "iwalk/tail_sequence.hpp"

#include <cmath>

#include "iwalk/error.hpp"

namespace iwalk {

TailSequence::TailSequence(std::vector<double> values, double deficit,
                           std::string tag, bool cap_reached)
    : deficit_(deficit), tag_(std::move(tag)), cap_reached_(cap_reached) {
  if (values.empty() || values[0] != 1.0) {
    throw ValidationError("tail sequence must start with omega_0 = 1");
  }
  for (std::size_t n = 1; n < values.size(); ++n) {
    if (!(values[n] < values[n - 1]) || !(values[n] > 0.0)) {
      throw ValidationError("tail sequence not strictly decreasing in (0,1] at n = " +
                            std::to_string(n));
    }
  }
  if (!std::isfinite(deficit) || deficit < 0.0 || deficit > values.back()) {
    throw ValidationError("tail deficit must lie in [0, omega_N]");
  }
  values_ = std::make_shared<const std::vector<double>>(std::move(values));
}

bool TailSequence::same_values(const TailSequence& other) const noexcept {
  return deficit_ == other.deficit_ &&
         (values_ == other.values_ || *values_ == *other.values_);
}

}  // namespace iwalk
