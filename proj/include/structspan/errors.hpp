#pragma once

#include <stdexcept>
#include <string>

namespace structspan {

// Every failure the library raises carries a short machine-readable kind
// ("dimension", "numeric", ...) so the CLI can print one parsable line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define STRUCTSPAN_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(tag, what) {}            \
  };

STRUCTSPAN_DEFINE_ERROR(DimensionError, "dimension")
STRUCTSPAN_DEFINE_ERROR(NumericError, "numeric")
STRUCTSPAN_DEFINE_ERROR(ContractError, "contract")
STRUCTSPAN_DEFINE_ERROR(DeterminismError, "determinism")
STRUCTSPAN_DEFINE_ERROR(VocabularyError, "vocabulary")
STRUCTSPAN_DEFINE_ERROR(DataError, "data")
STRUCTSPAN_DEFINE_ERROR(ConfigError, "config")
STRUCTSPAN_DEFINE_ERROR(CheckpointError, "checkpoint")

#undef STRUCTSPAN_DEFINE_ERROR

}  // namespace structspan
