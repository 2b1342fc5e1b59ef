#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace fase {

// Base class for every diagnostic the library raises. `name()` is the stable
// condition identifier used in CLI output and exit-code mapping.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(name + ": " + what), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define FASE_DEFINE_ERROR(NAME)                                          \
    struct NAME : Error {                                                 \
        explicit NAME(const std::string& what) : Error(#NAME, what) {}    \
    }

FASE_DEFINE_ERROR(InvalidInput);
FASE_DEFINE_ERROR(ParseError);
FASE_DEFINE_ERROR(WrongMode);
FASE_DEFINE_ERROR(SingularSystem);
FASE_DEFINE_ERROR(SingularInput);
FASE_DEFINE_ERROR(RankDeficient);
FASE_DEFINE_ERROR(HeywoodCase);
FASE_DEFINE_ERROR(NotConverged);
FASE_DEFINE_ERROR(CommunalityCollapse);
FASE_DEFINE_ERROR(ImproperScale);
FASE_DEFINE_ERROR(UnreliableSimulation);
FASE_DEFINE_ERROR(NumericalBreakdown);
FASE_DEFINE_ERROR(InternalContractViolation);

#undef FASE_DEFINE_ERROR

}  // namespace fase
