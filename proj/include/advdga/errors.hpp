#pragma once

#include <stdexcept>
#include <string>

namespace advdga {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define ADVDGA_DEFINE_ERROR(NAME)                                  \
  struct NAME : Error {                                            \
    explicit NAME(const std::string& what = #NAME) : Error(what) {} \
  }

ADVDGA_DEFINE_ERROR(EmptyDomain);
ADVDGA_DEFINE_ERROR(DomainTooLong);
ADVDGA_DEFINE_ERROR(UnknownSymbol);
ADVDGA_DEFINE_ERROR(InvalidDomain);

ADVDGA_DEFINE_ERROR(ShapeMismatch);
ADVDGA_DEFINE_ERROR(NotOnTape);
ADVDGA_DEFINE_ERROR(NotAScalar);

ADVDGA_DEFINE_ERROR(FormatVersionMismatch);
ADVDGA_DEFINE_ERROR(CorruptFile);
ADVDGA_DEFINE_ERROR(IoError);

ADVDGA_DEFINE_ERROR(LengthOutOfRange);
ADVDGA_DEFINE_ERROR(ZeroVector);

ADVDGA_DEFINE_ERROR(InvalidConfig);
ADVDGA_DEFINE_ERROR(NoRegistrableLabel);
ADVDGA_DEFINE_ERROR(UnknownSuffix);
ADVDGA_DEFINE_ERROR(EmptyDataset);
ADVDGA_DEFINE_ERROR(PoolExhausted);
ADVDGA_DEFINE_ERROR(UnknownGroup);
ADVDGA_DEFINE_ERROR(EmptyAfterFiltering);
ADVDGA_DEFINE_ERROR(EmptyInput);
ADVDGA_DEFINE_ERROR(FileNotFound);
ADVDGA_DEFINE_ERROR(HygieneViolation);

#undef ADVDGA_DEFINE_ERROR

}  // namespace advdga
