#include "formatscope/mimetype.hpp"

#include <algorithm>

#include "formatscope/util.hpp"

namespace formatscope {

const char* to_string(ParamKey key) {
    switch (key) {
    case ParamKey::version: return "version";
    case ParamKey::software: return "software";
    case ParamKey::hardware: return "hardware";
    }
    return "";
}

std::optional<ParamKey> param_key_from(std::string_view name) {
    std::string lowered = to_lower(trim(name));
    if (lowered == "version") return ParamKey::version;
    if (lowered == "software") return ParamKey::software;
    if (lowered == "hardware") return ParamKey::hardware;
    return std::nullopt;
}

namespace {

struct ParamScan {
    std::string key;
    std::string value;
};

// Splits the text after the base type into key=value parameters, honoring
// double quotes with backslash escapes. Quoted values may contain ';'.
std::vector<ParamScan> scan_params(std::string_view rest) {
    std::vector<ParamScan> out;
    size_t pos = 0;
    while (pos < rest.size()) {
        while (pos < rest.size() && (rest[pos] == ';' || std::isspace(static_cast<unsigned char>(rest[pos])))) ++pos;
        if (pos >= rest.size()) break;
        size_t eq = rest.find('=', pos);
        if (eq == std::string_view::npos) break; // trailing junk without '=': ignore
        std::string key(trim(rest.substr(pos, eq - pos)));
        pos = eq + 1;
        std::string value;
        while (pos < rest.size() && (rest[pos] == ' ' || rest[pos] == '\t')) ++pos;
        if (pos < rest.size() && rest[pos] == '"') {
            ++pos;
            while (pos < rest.size() && rest[pos] != '"') {
                if (rest[pos] == '\\' && pos + 1 < rest.size()) {
                    value.push_back(rest[pos + 1]);
                    pos += 2;
                } else {
                    value.push_back(rest[pos]);
                    ++pos;
                }
            }
            if (pos < rest.size()) ++pos; // closing quote
            // consume up to the next ';'
            while (pos < rest.size() && rest[pos] != ';') ++pos;
        } else {
            size_t semi = rest.find(';', pos);
            size_t end = semi == std::string_view::npos ? rest.size() : semi;
            value = std::string(trim(rest.substr(pos, end - pos)));
            pos = end;
        }
        out.push_back({std::move(key), std::move(value)});
    }
    return out;
}

bool needs_quoting(std::string_view value) {
    return value.find(' ') != std::string_view::npos ||
           value.find(';') != std::string_view::npos ||
           value.find('"') != std::string_view::npos;
}

} // namespace

ExtendedMimeType ExtendedMimeType::parse(std::string_view text) {
    std::string_view body = trim(text);
    size_t semi = std::string_view::npos;
    // The base type never contains quotes, so scanning for the first ';'
    // before parameter handling is safe.
    semi = body.find(';');
    std::string_view base_part = semi == std::string_view::npos ? body : body.substr(0, semi);
    base_part = trim(base_part);

    size_t slash = base_part.find('/');
    if (slash == std::string_view::npos) {
        throw MalformedMimeError("missing '/' in \"" + std::string(text) + "\"");
    }
    std::string type = to_lower(trim(base_part.substr(0, slash)));
    std::string subtype = to_lower(trim(base_part.substr(slash + 1)));
    if (type.empty() || subtype.empty()) {
        throw MalformedMimeError("empty type or subtype in \"" + std::string(text) + "\"");
    }
    if (!is_valid_token(type) || !is_valid_token(subtype)) {
        throw MalformedMimeError("non-token characters in \"" + std::string(text) + "\"");
    }

    ExtendedMimeType result;
    result.type = std::move(type);
    result.subtype = std::move(subtype);

    if (semi != std::string_view::npos) {
        for (auto& p : scan_params(body.substr(semi + 1))) {
            auto key = param_key_from(p.key);
            if (!key || p.value.empty()) continue; // unknown keys and empty values dropped
            result.add_param_if_absent(*key, std::move(p.value));
        }
    }
    return result;
}

ExtendedMimeType ExtendedMimeType::make(std::string type, std::string subtype) {
    ExtendedMimeType m;
    m.type = to_lower(type);
    m.subtype = to_lower(subtype);
    return m;
}

std::string ExtendedMimeType::serialize() const {
    std::string out = base();
    for (const auto& [key, value] : params) {
        out += "; ";
        out += to_string(key);
        out += '=';
        if (needs_quoting(value)) {
            out += '"';
            for (char c : value) {
                if (c == '"' || c == '\\') out += '\\';
                out += c;
            }
            out += '"';
        } else {
            out += value;
        }
    }
    return out;
}

const std::string* ExtendedMimeType::param(ParamKey key) const {
    for (const auto& [k, v] : params) {
        if (k == key) return &v;
    }
    return nullptr;
}

bool ExtendedMimeType::add_param_if_absent(ParamKey key, std::string value) {
    if (param(key) != nullptr) return false;
    auto it = std::find_if(params.begin(), params.end(),
                           [&](const auto& kv) { return static_cast<int>(kv.first) > static_cast<int>(key); });
    params.emplace(it, key, std::move(value));
    return true;
}

void ExtendedMimeType::set_param(ParamKey key, std::string value) {
    for (auto& [k, v] : params) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    add_param_if_absent(key, std::move(value));
}

bool base_equal(const ExtendedMimeType& a, const ExtendedMimeType& b) {
    return a.type == b.type && a.subtype == b.subtype;
}

IdentificationOutcome IdentificationOutcome::parse(std::string_view text) {
    if (trim(text) == kUnidentifiedToken) return unidentified();
    return of(ExtendedMimeType::parse(text));
}

std::string IdentificationOutcome::serialize() const {
    return mime ? mime->serialize() : std::string(kUnidentifiedToken);
}

} // namespace formatscope
