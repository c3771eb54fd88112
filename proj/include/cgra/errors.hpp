#pragma once

// Exception hierarchy shared by every module. Input problems (files, text,
// bitstreams) derive from InputError; faults raised while executing a kernel
// derive from SimError. The CLI maps the two families onto distinct exit codes.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgra {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class IoError : public InputError {
public:
    using InputError::InputError;
};

/// Malformed JSON, unknown keys, bad memory-image lines.
class ParseError : public InputError {
public:
    using InputError::InputError;
};

/// A value violates a documented invariant. `field()` names the culprit.
class ValidationError : public InputError {
public:
    ValidationError(std::string field, const std::string& what)
        : InputError(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Kernel text grammar violation; line and column are 1-based.
class SyntaxError : public InputError {
public:
    SyntaxError(std::size_t line, std::size_t col, const std::string& what)
        : InputError("line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + what),
          line_(line), col_(col), detail_(what) {}
    /// Same error located in a file: "path:line:col: what".
    SyntaxError(const std::string& file, const SyntaxError& e)
        : InputError(file + ":" + std::to_string(e.line_) + ":" + std::to_string(e.col_) + ": " + e.detail_),
          line_(e.line_), col_(e.col_), detail_(e.detail_) {}
    std::size_t line() const { return line_; }
    std::size_t col() const { return col_; }

private:
    std::size_t line_;
    std::size_t col_;
    std::string detail_;
};

/// Kernel grid does not match the architecture's rows x cols.
class ShapeError : public InputError {
public:
    using InputError::InputError;
};

/// Bitstream header or length is inconsistent.
class FormatError : public InputError {
public:
    using InputError::InputError;
};

/// Characterization file problems; every finding is collected before throwing.
class LintError : public InputError {
public:
    explicit LintError(std::vector<std::string> findings)
        : InputError(join(findings)), findings_(std::move(findings)) {}
    const std::vector<std::string>& findings() const { return findings_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out = "characterization lint failed:";
        for (const auto& s : items) out += "\n  - " + s;
        return out;
    }
    std::vector<std::string> findings_;
};

class AddressOutOfRange : public InputError {
public:
    using InputError::InputError;
};

class MisalignedAddress : public InputError {
public:
    using InputError::InputError;
};

enum class SimFault { MisalignedAddress, AddressOutOfRange, PcOverrun };

/// Runtime fault during kernel execution, tagged with where it happened.
class SimError : public Error {
public:
    SimError(SimFault fault, std::size_t step, int row, int col, const std::string& what)
        : Error(describe(fault) + " at step " + std::to_string(step) +
                (row >= 0 ? " PE(" + std::to_string(row) + "," + std::to_string(col) + ")" : "") +
                ": " + what),
          fault_(fault), step_(step), row_(row), col_(col) {}

    SimFault fault() const { return fault_; }
    std::size_t step() const { return step_; }
    int row() const { return row_; }
    int col() const { return col_; }

private:
    static std::string describe(SimFault f) {
        switch (f) {
            case SimFault::MisalignedAddress: return "misaligned address";
            case SimFault::AddressOutOfRange: return "address out of range";
            case SimFault::PcOverrun: return "pc overrun";
        }
        return "simulation fault";
    }
    SimFault fault_;
    std::size_t step_;
    int row_;
    int col_;
};

}  // namespace cgra
