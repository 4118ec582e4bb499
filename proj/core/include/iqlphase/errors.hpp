#pragma once

#include <stdexcept>
#include <string>

namespace iqlphase {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedCondition : public Error { public: using Error::Error; };
class InvalidConfig : public Error { public: using Error::Error; };
class StepAfterDone : public Error { public: using Error::Error; };
class IndexOutOfRange : public Error { public: using Error::Error; };
class DimensionMismatch : public Error { public: using Error::Error; };
class NonFiniteGradient : public Error { public: using Error::Error; };
class WarmupNotReached : public Error { public: using Error::Error; };
class EmptyWindow : public Error { public: using Error::Error; };
class DegenerateNormalizer : public Error { public: using Error::Error; };
class TooFewPoints : public Error { public: using Error::Error; };
class MissingRuns : public Error { public: using Error::Error; };
class FormatError : public Error { public: using Error::Error; };

}  // namespace iqlphase
