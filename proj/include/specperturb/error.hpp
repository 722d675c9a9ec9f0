#ifndef SPECPERTURB_ERROR_HPP
#define SPECPERTURB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace specperturb {

/// Bad input: wrong shape, out-of-range parameter, malformed file.
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation could not produce a meaningful answer (collapsed eigengap,
/// no valid difference vectors, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace specperturb

#endif  // SPECPERTURB_ERROR_HPP
