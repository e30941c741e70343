#ifndef BDK_ERRORS_HPP
#define BDK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bdk {

// Error families map 1:1 onto CLI exit codes.
enum class ErrorFamily : int {
    io = 2,
    validation = 3,
    numeric = 4,
    not_found = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorFamily family, const std::string& what)
        : std::runtime_error(what), family_(family) {}

    ErrorFamily family() const noexcept { return family_; }
    int exit_code() const noexcept { return static_cast<int>(family_); }

private:
    ErrorFamily family_;
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorFamily::io, what) {}
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(ErrorFamily::validation, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorFamily::numeric, what) {}
};

struct NotFoundError : Error {
    explicit NotFoundError(const std::string& what) : Error(ErrorFamily::not_found, what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ValidationError(what);
}

} // namespace bdk

#endif // BDK_ERRORS_HPP
