#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace formatscope {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input text is not a usable "type/subtype" MIME form.
class MalformedMimeError : public Error {
public:
    using Error::Error;
};

// Crawl timestamp is not 14 decimal digits.
class BadTimestampError : public Error {
public:
    using Error::Error;
};

// Irrecoverable framing damage in an archive file. Carries the byte offset
// (compressed offset for .gz inputs) where the damage was detected.
class CorruptArchiveError : public Error {
public:
    CorruptArchiveError(uint64_t offset, const std::string& reason)
        : Error("corrupt archive at offset " + std::to_string(offset) + ": " + reason),
          offset_(offset) {}
    uint64_t offset() const { return offset_; }

private:
    uint64_t offset_;
};

// File extension is not one of the supported archive forms.
class UnsupportedFormatError : public Error {
public:
    using Error::Error;
};

// A signature file or corpus spec violates its schema. `path` is a
// JSON-pointer-like location of the offending node.
class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string& reason)
        : Error(path.empty() ? reason : path + ": " + reason), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// The priority_over relation of a signature set contains a cycle.
class CycleError : public Error {
public:
    explicit CycleError(std::vector<std::string> cycle)
        : Error("priority cycle: " + join(cycle)), cycle_(std::move(cycle)) {}
    const std::vector<std::string>& cycle() const { return cycle_; }

private:
    static std::string join(const std::vector<std::string>& ids) {
        std::string out;
        for (const auto& id : ids) {
            if (!out.empty()) out += " -> ";
            out += id;
        }
        return out;
    }
    std::vector<std::string> cycle_;
};

// Malformed line in a profile dataset. Line numbers are 1-based.
class ParseError : public Error {
public:
    ParseError(size_t line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
    size_t line() const { return line_; }

private:
    size_t line_;
};

// A merged count left the 64-bit range; treated as corrupt input.
class OverflowError : public Error {
public:
    using Error::Error;
};

// Least-squares fit is undefined for the given points.
class DegenerateFitError : public Error {
public:
    using Error::Error;
};

class UnknownBaseTypeError : public Error {
public:
    using Error::Error;
};

// Corpus spec is structurally valid JSON but semantically unusable.
class SpecError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace formatscope
