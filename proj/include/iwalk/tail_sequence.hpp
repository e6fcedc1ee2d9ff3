#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace iwalk {

/// One site's strictly decreasing tail sequence omega_0 = 1 > omega_1 > ...
/// stored down to a truncation index N.
///
/// The deficit is an upper bound for every omitted value omega_n, n > N.
/// All built-in families set it to omega_{N+1} itself, so the atom
/// P(tau = N + 1) = omega_N - deficit is exact for them; for sequences read
/// from files it is a lower bound. Values are held behind a shared pointer
/// so identical sites share storage.
class TailSequence {
 public:
  /// Validates the invariants; throws ValidationError on violation.
  TailSequence(std::vector<double> values, double deficit, std::string tag,
               bool cap_reached = false);

  std::span<const double> values() const noexcept { return *values_; }

  /// Truncation index N (values() has N + 1 entries).
  std::size_t last_index() const noexcept { return values_->size() - 1; }

  /// omega_n for n <= N, 0 beyond (the lower end of the bracket
  /// [0, deficit] for omitted values).
  double omega(std::size_t n) const noexcept {
    return n < values_->size() ? (*values_)[n] : 0.0;
  }

  /// Upper end of the bracket for omega_n: exact when stored, else deficit.
  double omega_upper(std::size_t n) const noexcept {
    return n < values_->size() ? (*values_)[n] : deficit_;
  }

  double deficit() const noexcept { return deficit_; }
  bool cap_reached() const noexcept { return cap_reached_; }
  const std::string& tag() const noexcept { return tag_; }

  /// True when both sequences hold the same values and deficit.
  bool same_values(const TailSequence& other) const noexcept;

 private:
  std::shared_ptr<const std::vector<double>> values_;
  double deficit_;
  std::string tag_;
  bool cap_reached_;
};

/// Truncation knobs shared by every environment constructor.
struct Truncation {
  std::size_t sites = 100;        ///< materialized sites 0..sites-1
  std::size_t n_cap = 100000;     ///< hard cap on the stored tail index N
  double tail_tol = 1e-12;        ///< stop once omega_N <= tail_tol
};

}  // namespace iwalk
