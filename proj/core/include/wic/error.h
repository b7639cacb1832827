#ifndef WIC_ERROR_H_
#define WIC_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace wic {

// Violated precondition (dimension mismatch, empty input where forbidden,
// out-of-range id). Indicates a bug in the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed text input; the message names the offending line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input whose content is inconsistent (alignment link outside
// the sentence, label outside the inventory, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LookupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wic

#define WIC_CHECK(cond, msg)                                              \
  do {                                                                    \
    if (!(cond)) {                                                        \
      std::ostringstream wic_check_os_;                                   \
      wic_check_os_ << __FILE__ << ":" << __LINE__ << ": " #cond ": " << msg; \
      throw ::wic::ContractViolation(wic_check_os_.str());                \
    }                                                                     \
  } while (0)

#endif  // WIC_ERROR_H_
