#include "formatscope/extractors.hpp"

#include <array>
#include <cstdint>

#include "formatscope/util.hpp"

namespace formatscope {

namespace {

constexpr size_t kMetadataValueCap = 256;

// Strips control characters, trims, caps length. Empty results become absent.
std::optional<std::string> clean_value(std::string_view raw) {
    std::string out;
    out.reserve(std::min(raw.size(), kMetadataValueCap));
    for (char c : raw) {
        auto u = static_cast<unsigned char>(c);
        if (u < 0x20 || u == 0x7f) continue;
        out.push_back(c);
        if (out.size() >= kMetadataValueCap) break;
    }
    std::string trimmed(trim(out));
    if (trimmed.empty()) return std::nullopt;
    return trimmed;
}

void append_utf8(std::string& out, uint32_t cp) {
    if (cp <= 0x7f) {
        out.push_back(static_cast<char>(cp));
    } else if (cp <= 0x7ff) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp <= 0xffff) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

std::string utf16be_to_utf8(std::string_view bytes) {
    std::string out;
    size_t i = 0;
    while (i + 1 < bytes.size()) {
        uint32_t unit = (static_cast<unsigned char>(bytes[i]) << 8) | static_cast<unsigned char>(bytes[i + 1]);
        i += 2;
        if (unit >= 0xd800 && unit <= 0xdbff && i + 1 < bytes.size()) {
            uint32_t low = (static_cast<unsigned char>(bytes[i]) << 8) | static_cast<unsigned char>(bytes[i + 1]);
            if (low >= 0xdc00 && low <= 0xdfff) {
                i += 2;
                append_utf8(out, 0x10000 + ((unit - 0xd800) << 10) + (low - 0xdc00));
                continue;
            }
        }
        if (unit >= 0xd800 && unit <= 0xdfff) continue; // unpaired surrogate
        append_utf8(out, unit);
    }
    return out;
}

// PDF literal string starting at '(' — handles nesting, backslash escapes,
// and octal codes. Returns the decoded bytes, or nullopt if no balanced
// string is found within a sane distance.
std::optional<std::string> parse_pdf_string(std::string_view payload, size_t open) {
    if (open >= payload.size() || payload[open] != '(') return std::nullopt;
    std::string out;
    int depth = 1;
    size_t limit = std::min(payload.size(), open + 1 + 4096);
    size_t i = open + 1;
    while (i < limit) {
        char c = payload[i];
        if (c == '\\') {
            if (i + 1 >= limit) return std::nullopt;
            char e = payload[i + 1];
            i += 2;
            switch (e) {
            case 'n': out.push_back('\n'); break;
            case 'r': out.push_back('\r'); break;
            case 't': out.push_back('\t'); break;
            case 'b': out.push_back('\b'); break;
            case 'f': out.push_back('\f'); break;
            case '(': out.push_back('('); break;
            case ')': out.push_back(')'); break;
            case '\\': out.push_back('\\'); break;
            case '\r':
                if (i < limit && payload[i] == '\n') ++i; // line continuation
                break;
            case '\n': break;
            default:
                if (e >= '0' && e <= '7') {
                    int value = e - '0';
                    for (int k = 0; k < 2 && i < limit && payload[i] >= '0' && payload[i] <= '7'; ++k) {
                        value = value * 8 + (payload[i] - '0');
                        ++i;
                    }
                    out.push_back(static_cast<char>(value & 0xff));
                } else {
                    out.push_back(e); // unknown escape: the backslash is dropped
                }
            }
            continue;
        }
        if (c == '(') ++depth;
        if (c == ')') {
            if (--depth == 0) {
                if (out.size() >= 2 && static_cast<unsigned char>(out[0]) == 0xfe &&
                    static_cast<unsigned char>(out[1]) == 0xff) {
                    return utf16be_to_utf8(std::string_view(out).substr(2));
                }
                return out;
            }
        }
        out.push_back(c);
        ++i;
    }
    return std::nullopt;
}

// Last occurrence of `/Key (string)` in `region` that parses, with the
// string possibly separated from the key by whitespace.
std::optional<std::string> last_pdf_name_string(std::string_view region, std::string_view key) {
    std::optional<std::string> found;
    size_t pos = 0;
    while (true) {
        size_t at = region.find(key, pos);
        if (at == std::string_view::npos) break;
        pos = at + key.size();
        size_t p = pos;
        while (p < region.size() && (region[p] == ' ' || region[p] == '\t' || region[p] == '\r' || region[p] == '\n')) ++p;
        if (auto value = parse_pdf_string(region, p)) found = std::move(*value);
    }
    return found;
}

// ---- EXIF -----------------------------------------------------------------

struct TiffReader {
    std::string_view data; // TIFF structure, offsets relative to its start
    bool big_endian = false;

    std::optional<uint16_t> u16(size_t off) const {
        if (off + 2 > data.size()) return std::nullopt;
        auto a = static_cast<unsigned char>(data[off]);
        auto b = static_cast<unsigned char>(data[off + 1]);
        return big_endian ? static_cast<uint16_t>((a << 8) | b) : static_cast<uint16_t>((b << 8) | a);
    }
    std::optional<uint32_t> u32(size_t off) const {
        if (off + 4 > data.size()) return std::nullopt;
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            auto byte = static_cast<unsigned char>(data[off + (big_endian ? i : 3 - i)]);
            v = (v << 8) | byte;
        }
        return v;
    }
};

struct ExifStrings {
    std::optional<std::string> software;
    std::optional<std::string> make;
    std::optional<std::string> model;
};

// IFD0 walk. Only ASCII (type 2) values of the three tags of interest are
// read; anything structurally off abandons the walk silently.
ExifStrings read_tiff_ifd0(std::string_view tiff) {
    ExifStrings out;
    if (tiff.size() < 8) return out;
    TiffReader reader{tiff, false};
    if (tiff[0] == 'M' && tiff[1] == 'M') {
        reader.big_endian = true;
    } else if (!(tiff[0] == 'I' && tiff[1] == 'I')) {
        return out;
    }
    if (reader.u16(2) != uint16_t{42}) return out;
    auto ifd_offset = reader.u32(4);
    if (!ifd_offset) return out;
    auto count = reader.u16(*ifd_offset);
    if (!count || *count > 512) return out;
    for (uint32_t i = 0; i < *count; ++i) {
        size_t entry = *ifd_offset + 2 + size_t{12} * i;
        auto tag = reader.u16(entry);
        auto type = reader.u16(entry + 2);
        auto value_count = reader.u32(entry + 4);
        if (!tag || !type || !value_count) return out;
        if (*type != 2) continue; // ASCII only
        if (*tag != 0x0131 && *tag != 0x010f && *tag != 0x0110) continue;
        if (*value_count == 0 || *value_count > 0x10000) continue;
        size_t where;
        if (*value_count <= 4) {
            where = entry + 8;
        } else {
            auto offset = reader.u32(entry + 8);
            if (!offset) return out;
            where = *offset;
        }
        if (where + *value_count > tiff.size()) continue;
        std::string_view raw = tiff.substr(where, *value_count);
        // ASCII values are NUL-terminated; clean_value drops the terminator.
        auto value = clean_value(raw);
        if (!value) continue;
        if (*tag == 0x0131) out.software = value;
        if (*tag == 0x010f) out.make = value;
        if (*tag == 0x0110) out.model = value;
    }
    return out;
}

std::optional<std::string_view> find_jpeg_exif_segment(std::string_view payload) {
    if (payload.size() < 4) return std::nullopt;
    if (static_cast<unsigned char>(payload[0]) != 0xff || static_cast<unsigned char>(payload[1]) != 0xd8) {
        return std::nullopt;
    }
    size_t pos = 2;
    for (int guard = 0; guard < 256 && pos + 4 <= payload.size(); ++guard) {
        if (static_cast<unsigned char>(payload[pos]) != 0xff) return std::nullopt;
        while (pos < payload.size() && static_cast<unsigned char>(payload[pos]) == 0xff) ++pos;
        if (pos >= payload.size()) return std::nullopt;
        auto marker = static_cast<unsigned char>(payload[pos]);
        ++pos;
        if (marker == 0xd9 || marker == 0xda) return std::nullopt; // EOI / SOS: no APP1 seen
        if (marker >= 0xd0 && marker <= 0xd7) continue;            // standalone
        if (pos + 2 > payload.size()) return std::nullopt;
        size_t length = (static_cast<unsigned char>(payload[pos]) << 8) | static_cast<unsigned char>(payload[pos + 1]);
        if (length < 2 || pos + length > payload.size()) return std::nullopt;
        std::string_view body = payload.substr(pos + 2, length - 2);
        if (marker == 0xe1 && body.size() >= 6 && body.substr(0, 6) == std::string_view("Exif\0\0", 6)) {
            return body.substr(6);
        }
        pos += length;
    }
    return std::nullopt;
}

} // namespace

PayloadMetadata extract_pdf_metadata(std::string_view payload) {
    PayloadMetadata meta;

    std::string_view head = payload.substr(0, std::min<size_t>(payload.size(), 1024));
    size_t header = head.find("%PDF-");
    if (header != std::string_view::npos) {
        size_t p = header + 5;
        std::string version;
        while (p < head.size() && version.size() < 8 &&
               ((head[p] >= '0' && head[p] <= '9') || head[p] == '.')) {
            version.push_back(head[p]);
            ++p;
        }
        while (!version.empty() && version.back() == '.') version.pop_back();
        if (!version.empty() && version[0] >= '0' && version[0] <= '9') {
            meta.version = version;
        }
    }

    size_t tail_window = std::min<size_t>(payload.size(), 1024);
    meta.pdf_has_eof =
        payload.substr(payload.size() - tail_window).find("%%EOF") != std::string_view::npos;

    size_t info_window = std::min<size_t>(payload.size(), 256 * 1024);
    std::string_view region = payload.substr(payload.size() - info_window);
    auto software = last_pdf_name_string(region, "/Producer");
    if (!software) software = last_pdf_name_string(region, "/Creator");
    if (software) meta.software = clean_value(*software);

    return meta;
}

PayloadMetadata extract_html_version(std::string_view payload) {
    PayloadMetadata meta;
    std::string_view head = payload.substr(0, std::min<size_t>(payload.size(), 1024));
    size_t doctype = std::string_view::npos;
    for (size_t i = 0; i + 9 <= head.size(); ++i) {
        if (starts_with_ci(head.substr(i), "<!DOCTYPE")) {
            doctype = i;
            break;
        }
    }
    if (doctype == std::string_view::npos) return meta;

    size_t region_end = std::min(payload.size(), doctype + 256);
    std::string_view region = payload.substr(doctype, region_end - doctype);
    // Longer identifiers first: "HTML 4.0" is a prefix of "HTML 4.01".
    static const std::array<std::pair<std::string_view, std::string_view>, 6> table = {{
        {"-//IETF//DTD HTML 2.0", "2.0"},
        {"HTML 4.01", "4.01"},
        {"HTML 4.0", "4.0"},
        {"HTML 3.2", "3.2"},
        {"XHTML 1.1", "xhtml-1.1"},
        {"XHTML 1.0", "xhtml-1.0"},
    }};
    for (const auto& [needle, version] : table) {
        if (region.find(needle) != std::string_view::npos) {
            meta.version = std::string(version);
            break;
        }
    }
    return meta;
}

PayloadMetadata extract_exif_software(std::string_view payload) {
    PayloadMetadata meta;
    ExifStrings strings;
    if (payload.size() >= 2 && static_cast<unsigned char>(payload[0]) == 0xff &&
        static_cast<unsigned char>(payload[1]) == 0xd8) {
        auto tiff = find_jpeg_exif_segment(payload);
        if (!tiff) return meta;
        strings = read_tiff_ifd0(*tiff);
    } else {
        strings = read_tiff_ifd0(payload);
    }
    meta.software = strings.software;
    std::string hardware;
    if (strings.make) hardware = *strings.make;
    if (strings.model) {
        if (!hardware.empty()) hardware += ' ';
        hardware += *strings.model;
    }
    if (!hardware.empty()) meta.hardware = clean_value(hardware);
    return meta;
}

IdentificationOutcome apply_metadata(IdentificationOutcome outcome, const PayloadMetadata& meta) {
    if (!outcome.mime) return outcome;
    if (meta.version) outcome.mime->add_param_if_absent(ParamKey::version, *meta.version);
    if (meta.software) outcome.mime->add_param_if_absent(ParamKey::software, *meta.software);
    if (meta.hardware) outcome.mime->add_param_if_absent(ParamKey::hardware, *meta.hardware);
    return outcome;
}

} // namespace formatscope
