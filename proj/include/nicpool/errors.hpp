#pragma once

#include <stdexcept>
#include <string>

namespace nicpool {

enum class Errc {
    // app_model
    EmptyPipeline,
    UnknownUcf,
    AbstractionMismatch,
    UnknownAccelerator,
    TypeMismatch,
    UnknownSocket,
    DuplicateRegistration,
    BadParams,
    // cluster_model
    EmptyCluster,
    BadAcceleratorKind,
    NegativeResource,
    Insufficient,
    UnknownNic,
    DoubleReclaim,
    // profiler
    InsufficientForProfiling,
    // planner
    EmptyInput,
    NonPositiveLatency,
    NonPositiveTarget,
    NothingPlaceable,
    GrantMissing,
    // state_engine
    NotFound,
    ValueTooLarge,
    DuplicateAdd,
    NonReducibleUcf,
    UnknownApp,
    // orchestrator / controller
    DstUnavailable,
    BackupUnavailable,
    // scenario
    ParseError,
    ValidationError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void throw_error(Errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::EmptyPipeline: return "EmptyPipeline";
        case Errc::UnknownUcf: return "UnknownUcf";
        case Errc::AbstractionMismatch: return "AbstractionMismatch";
        case Errc::UnknownAccelerator: return "UnknownAccelerator";
        case Errc::TypeMismatch: return "TypeMismatch";
        case Errc::UnknownSocket: return "UnknownSocket";
        case Errc::DuplicateRegistration: return "DuplicateRegistration";
        case Errc::BadParams: return "BadParams";
        case Errc::EmptyCluster: return "EmptyCluster";
        case Errc::BadAcceleratorKind: return "BadAcceleratorKind";
        case Errc::NegativeResource: return "NegativeResource";
        case Errc::Insufficient: return "Insufficient";
        case Errc::UnknownNic: return "UnknownNic";
        case Errc::DoubleReclaim: return "DoubleReclaim";
        case Errc::InsufficientForProfiling: return "InsufficientForProfiling";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::NonPositiveLatency: return "NonPositiveLatency";
        case Errc::NonPositiveTarget: return "NonPositiveTarget";
        case Errc::NothingPlaceable: return "NothingPlaceable";
        case Errc::GrantMissing: return "GrantMissing";
        case Errc::NotFound: return "NotFound";
        case Errc::ValueTooLarge: return "ValueTooLarge";
        case Errc::DuplicateAdd: return "DuplicateAdd";
        case Errc::NonReducibleUcf: return "NonReducibleUcf";
        case Errc::UnknownApp: return "UnknownApp";
        case Errc::DstUnavailable: return "DstUnavailable";
        case Errc::BackupUnavailable: return "BackupUnavailable";
        case Errc::ParseError: return "ParseError";
        case Errc::ValidationError: return "ValidationError";
    }
    return "UnknownError";
}

}  // namespace nicpool
