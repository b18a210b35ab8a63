#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace formatscope {

// Payloads are raw byte sequences; std::string keeps them cheap to slice
// and search.
using Bytes = std::string;

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool starts_with_ci(std::string_view text, std::string_view prefix);

// RFC 2045 token character: printable ASCII minus tspecials and space.
bool is_token_char(char c);
bool is_valid_token(std::string_view s);

// Hex with optional whitespace between byte pairs ("89 50 4E 47" or "89504e47").
std::optional<Bytes> hex_decode(std::string_view hex);
std::string hex_encode(std::string_view bytes);

uint32_t crc32_of(std::string_view bytes);

// splitmix64: counter-based generator, stable across platforms. Used for
// every piece of synthetic-corpus randomness so records can be derived
// independently of each other.
class DetRng {
public:
    explicit DetRng(uint64_t seed) : state_(seed) {}
    DetRng(uint64_t seed, uint64_t stream); // derives an independent stream

    uint64_t next_u64();
    // Uniform in [lo, hi], inclusive.
    uint64_t range(uint64_t lo, uint64_t hi);
    uint8_t next_byte() { return static_cast<uint8_t>(next_u64() >> 56); }
    double next_unit(); // [0,1)

private:
    uint64_t state_;
};

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Level comes from the FORMATSCOPE_LOG environment variable
// (error|warn|info|debug); default warn.
bool log_enabled(LogLevel level);
void log_line(LogLevel level, const std::string& message);

inline void log_error(const std::string& m) { log_line(LogLevel::error, m); }
inline void log_warn(const std::string& m) { log_line(LogLevel::warn, m); }
inline void log_info(const std::string& m) { log_line(LogLevel::info, m); }
inline void log_debug(const std::string& m) { log_line(LogLevel::debug, m); }

} // namespace formatscope
