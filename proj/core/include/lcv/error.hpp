#ifndef LCV_ERROR_HPP
#define LCV_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lcv {

// Error categories map onto CLI exit codes: usage=2, data=3, provider=4.
enum class ErrorKind {
  Usage,
  Data,
  Provider,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message),
        kind_(kind),
        code_(std::move(code)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& code() const { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline Error usage_error(const std::string& code, const std::string& msg) {
  return Error(ErrorKind::Usage, code, msg);
}
inline Error data_error(const std::string& code, const std::string& msg) {
  return Error(ErrorKind::Data, code, msg);
}
inline Error provider_error(const std::string& code, const std::string& msg) {
  return Error(ErrorKind::Provider, code, msg);
}
inline Error internal_error(const std::string& code, const std::string& msg) {
  return Error(ErrorKind::Internal, code, msg);
}

}  // namespace lcv

#endif  // LCV_ERROR_HPP
