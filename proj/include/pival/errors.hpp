#pragma once

#include <stdexcept>
#include <string>

namespace pival {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error { public: using Error::Error; };
class DesignError : public Error { public: using Error::Error; };
class ConvergenceError : public Error { public: using Error::Error; };
class BoundaryError : public Error { public: using Error::Error; };
class DegeneracyError : public Error { public: using Error::Error; };
class DofError : public Error { public: using Error::Error; };
class SupportError : public Error { public: using Error::Error; };
class NotApplicableError : public Error { public: using Error::Error; };
class DimensionError : public Error { public: using Error::Error; };
class MixingError : public Error { public: using Error::Error; };
class HarnessError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };
class UsageError : public Error { public: using Error::Error; };

}  // namespace pival
