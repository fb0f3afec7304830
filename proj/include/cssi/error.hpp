#pragma once

#include <stdexcept>
#include <string>

namespace cssi {

/// Base of every error raised by the library. Callers that only need a
/// message can catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CSSI_DEFINE_ERROR(Name)                 \
    class Name : public Error {                 \
    public:                                     \
        using Error::Error;                     \
    }

CSSI_DEFINE_ERROR(NoRegion);
CSSI_DEFINE_ERROR(InvalidConfig);
CSSI_DEFINE_ERROR(ShapeMismatch);
CSSI_DEFINE_ERROR(NonFinite);
CSSI_DEFINE_ERROR(EmptySplit);
CSSI_DEFINE_ERROR(EmptyList);
CSSI_DEFINE_ERROR(EmptyInput);
CSSI_DEFINE_ERROR(EmptyRegion);
CSSI_DEFINE_ERROR(EmptySlice);
CSSI_DEFINE_ERROR(TooManyParents);
CSSI_DEFINE_ERROR(RegionTooLarge);
CSSI_DEFINE_ERROR(NotAPartition);
CSSI_DEFINE_ERROR(PreconditionFailed);
CSSI_DEFINE_ERROR(CsiDoesNotHold);
CSSI_DEFINE_ERROR(IoError);
CSSI_DEFINE_ERROR(MissingCheckpoint);
CSSI_DEFINE_ERROR(UnknownCampaign);

#undef CSSI_DEFINE_ERROR

}  // namespace cssi
