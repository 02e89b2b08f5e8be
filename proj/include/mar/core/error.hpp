#pragma once

#include <stdexcept>
#include <string>

namespace mar {

// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MAR_DEFINE_ERROR(Name, Base)      \
    class Name : public Base {            \
    public:                               \
        using Base::Base;                 \
    }

MAR_DEFINE_ERROR(IoError, Error);
MAR_DEFINE_ERROR(OutOfBounds, Error);
MAR_DEFINE_ERROR(DimensionMismatch, Error);
MAR_DEFINE_ERROR(EmbedderUnavailable, Error);
MAR_DEFINE_ERROR(ResponseFormatError, Error);
MAR_DEFINE_ERROR(InvalidScenario, Error);
MAR_DEFINE_ERROR(UnknownApp, Error);
MAR_DEFINE_ERROR(DeviceUnavailable, Error);
MAR_DEFINE_ERROR(InvalidCriteria, Error);
MAR_DEFINE_ERROR(InvalidTrajectory, Error);
MAR_DEFINE_ERROR(InvalidKbEntry, Error);
MAR_DEFINE_ERROR(DuplicateInstruction, InvalidKbEntry);
MAR_DEFINE_ERROR(UncoveredEntry, Error);

// Transport-level provider failures. Fatal for a run once retries are spent.
MAR_DEFINE_ERROR(ProviderError, Error);
MAR_DEFINE_ERROR(ScriptExhausted, ProviderError);
MAR_DEFINE_ERROR(MatcherMiss, ProviderError);

#undef MAR_DEFINE_ERROR

// Model output that does not name a valid atomic action.
class ParseError : public Error {
public:
    ParseError(const std::string& reason, std::string text)
        : Error(reason + ": '" + text + "'"), text_(std::move(text)) {}

    const std::string& text() const noexcept { return text_; }

private:
    std::string text_;
};

}  // namespace mar
