#include "formatscope/corpusgen.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "formatscope/errors.hpp"
#include "formatscope/mimetype.hpp"

namespace formatscope {

using nlohmann::json;

const std::vector<std::string> kTemplateNames = {
    "png", "gif87a", "gif89a", "jpeg",         "jpeg_exif", "jpeg_nojfif",
    "tiff", "bmp",   "ico",    "xbm",          "pdf",       "html",
    "html_tagless",  "css",    "js",           "text",      "random",
};

namespace {

constexpr std::string_view kPhrase = "the quick brown fox jumps over the lazy dog\n";

void put_u16le(Bytes& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32le(Bytes& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16be(Bytes& out, uint16_t v) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_u32be(Bytes& out, uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Filler that cannot collide with any signature literal: every byte has
// the high bit set.
void append_binary_pad(Bytes& out, DetRng& rng, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        out.push_back(static_cast<char>(rng.next_byte() | 0x80));
    }
}

// ASCII filler with no signature-relevant tokens.
void append_phrase_pad(Bytes& out, size_t n) {
    while (n > 0) {
        size_t take = std::min(n, kPhrase.size());
        out.append(kPhrase.substr(0, take));
        n -= take;
    }
}

Bytes zlib_pack(std::string_view raw) {
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    Bytes out(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(out.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  9) != Z_OK) {
        throw IoError("zlib compress failed");
    }
    out.resize(bound);
    return out;
}

Bytes png_chunk(const char* tag, const Bytes& data) {
    Bytes out;
    put_u32be(out, static_cast<uint32_t>(data.size()));
    Bytes body(tag, 4);
    body += data;
    out += body;
    put_u32be(out, crc32_of(body));
    return out;
}

std::string expect(const std::string& type, const std::string& subtype,
                   const std::string& version = "", const std::string& software = "",
                   const std::string& hardware = "") {
    ExtendedMimeType m = ExtendedMimeType::make(type, subtype);
    if (!version.empty()) m.add_param_if_absent(ParamKey::version, version);
    if (!software.empty()) m.add_param_if_absent(ParamKey::software, software);
    if (!hardware.empty()) m.add_param_if_absent(ParamKey::hardware, hardware);
    return m.serialize();
}

std::string join_hardware(const std::string& make, const std::string& model) {
    if (make.empty()) return model;
    if (model.empty()) return make;
    return make + " " + model;
}

// EXIF-style TIFF block, little endian, ASCII tags in ascending tag order.
Bytes tiff_block(const std::string& software, const std::string& make, const std::string& model) {
    struct Entry {
        uint16_t tag;
        std::string value;
    };
    std::vector<Entry> entries;
    if (!make.empty()) entries.push_back({0x010f, make});
    if (!model.empty()) entries.push_back({0x0110, model});
    if (!software.empty()) entries.push_back({0x0131, software});

    Bytes out("II", 2);
    put_u16le(out, 42);
    put_u32le(out, 8); // IFD0 right after the header
    put_u16le(out, static_cast<uint16_t>(entries.size()));

    size_t data_start = 8 + 2 + 12 * entries.size() + 4;
    Bytes data;
    for (const auto& entry : entries) {
        uint32_t count = static_cast<uint32_t>(entry.value.size() + 1); // with NUL
        put_u16le(out, entry.tag);
        put_u16le(out, 2); // ASCII
        put_u32le(out, count);
        if (count <= 4) {
            Bytes inline_value = entry.value;
            inline_value.push_back('\0');
            inline_value.resize(4, '\0');
            out += inline_value;
        } else {
            put_u32le(out, static_cast<uint32_t>(data_start + data.size()));
            data += entry.value;
            data.push_back('\0');
        }
    }
    put_u32le(out, 0); // no next IFD
    out += data;
    return out;
}

std::string escape_pdf_string(const std::string& text) {
    std::string out;
    for (char c : text) {
        if (c == '\\' || c == '(' || c == ')') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

// ---- payload templates ------------------------------------------------

void build_png(const RecipeLine& line, DetRng& rng, BuiltRecord* rec) {
    Bytes payload("\x89PNG\r\n\x1a\n", 8);
    Bytes ihdr;
    put_u32be(ihdr, 1); // width
    put_u32be(ihdr, 1); // height
    ihdr += Bytes("\x08\x00\x00\x00\x00", 5); // 8-bit grayscale
    payload += png_chunk("IHDR", ihdr);
    Bytes scanline;
    scanline.push_back('\0'); // no filter
    scanline.push_back(static_cast<char>(rng.next_byte()));
    payload += png_chunk("IDAT", zlib_pack(scanline));
    payload += png_chunk("IEND", Bytes());
    append_binary_pad(payload, rng, line.pad);
    rec->payload = std::move(payload);
    rec->expected_broad = expect("image", "png");
    rec->expected_fine = expect("image", "png", "1.0");
}

void build_gif(const RecipeLine& line, DetRng& rng, BuiltRecord* rec, const std::string& flavor) {
    Bytes payload = "GIF" + flavor;
    put_u16le(payload, 1); // width
    put_u16le(payload, 1); // height
    payload += Bytes("\x00\x00\x00", 3); // flags, background, aspect
    payload.push_back('\x3b'); // trailer
    append_binary_pad(payload, rng, line.pad);
    rec->payload = std::move(payload);
    rec->expected_broad = expect("image", "gif");
    rec->expected_fine = expect("image", "gif", flavor);
}

// Entropy-like bytes that can never be mistaken for a marker or an ASCII
// token: high bit always set, 0xFF remapped.
void append_jpeg_body(Bytes& out, DetRng& rng, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        uint8_t b = static_cast<uint8_t>(rng.next_byte() | 0x80);
        if (b == 0xff) b = 0xfe;
        out.push_back(static_cast<char>(b));
    }
}

void build_jpeg(const RecipeLine& line, DetRng& rng, BuiltRecord* rec) {
    Bytes payload("\xff\xd8\xff\xe0", 4);
    put_u16be(payload, 16); // APP0 length
    payload += Bytes("JFIF\x00\x01\x01\x00", 8);
    put_u16be(payload, 72); // x density
    put_u16be(payload, 72); // y density
    payload += Bytes("\x00\x00", 2); // no thumbnail
    append_jpeg_body(payload, rng, 256 + line.pad);
    payload += Bytes("\xff\xd9", 2);
    rec->payload = std::move(payload);
    rec->expected_broad = expect("image", "jpeg");
    rec->expected_fine = expect("image", "jpeg");
}

void build_jpeg_exif(const RecipeLine& line, DetRng& rng, BuiltRecord* rec) {
    Bytes tiff = tiff_block(line.software, line.make, line.model);
    Bytes payload("\xff\xd8\xff\xe1", 4);
    put_u16be(payload, static_cast<uint16_t>(2 + 6 + tiff.size()));
    payload += Bytes("Exif\x00\x00", 6);
    payload += tiff;
    append_jpeg_body(payload, rng, 256 + line.pad);
    payload += Bytes("\xff\xd9", 2);
    rec->payload = std::move(payload);
    std::string hardware = join_hardware(line.make, line.model);
    rec->expected_broad = expect("image", "jpeg", "", line.software, hardware);
    rec->expected_fine = expect("image", "jpeg", "", line.software, hardware);
}

// SOI with no JFIF/EXIF marker plus the single byte value the weak
// signature looks for: broad calls it JPEG, fine calls it x-pict.
void build_jpeg_nojfif(const RecipeLine& line, DetRng& rng, BuiltRecord* rec) {
    Bytes payload("\xff\xd8\xff\xdb", 4);
    append_jpeg_body(payload, rng, 640 + line.pad);
    payload += Bytes("\xff\xd9", 2);
    payload[522] = '\x11';
    rec->payload = std::move(payload);
    rec->expected_broad = expect("image", "jpeg");
    rec->expected_fine = expect("image", "x-pict");
}

void build_tiff(const RecipeLine& line, DetRng& rng, BuiltRecord* rec) {
    Bytes payload = tiff_block(line.software, line.make, line.model);
    append_binary_pad(payload, rng, 64 + line.pad);
    rec->payload = std::move(payload);
    std::string hardware = join_hardware(line.make, line.model);
    rec->expected_broad = expect("image", "tiff", "", line.software, hardware);
    rec->expected_fine = expect("image", "tiff", "", line.software, hardware);
}

void build_bmp(const RecipeLine& line, DetRng& rng, BuiltRecord* rec) {
    Bytes pixels;
    append_binary_pad(pixels, rng, 4); // one 24-bit pixel, row padded
    Bytes payload("BM", 2);
    put_u32le(payload, static_cast<uint32_t>(54 + pixels.size() + line.pad));
    put_u32le(payload, 0);  // reserved
    put_u32le(payload, 54); // pixel data offset
    put_u32le(payload, 40); // BITMAPINFOHEADER size
    put_u32le(payload, 1);  // width
    put_u32le(payload, 1);  // height
    put_u16le(payload, 1);  // planes
    put_u16le(payload, 24); // bpp
    put_u32le(payload, 0);  // compression
    put_u32le(payload, static_cast<uint32_t>(pixels.size()));
    put_u32le(payload, 2835);
    put_u32le(payload, 2835);
    put_u32le(payload, 0);
    put_u32le(payload, 0);
    payload += pixels;
    append_binary_pad(payload, rng, line.pad);
    rec->payload = std::move(payload);
    rec->expected_broad = expect("image", "bmp");
    rec->expected_fine = expect("image", "bmp");
}

void build_ico(const RecipeLine& line, DetRng& rng, BuiltRecord* rec) {
    Bytes bitmap;
    append_binary_pad(bitmap, rng, 64);
    Bytes payload;
    put_u16le(payload, 0); // reserved
    put_u16le(payload, 1); // icon type
    put_u16le(payload, 1); // one image
    payload.push_back('\x10'); // 16 px
    payload.push_back('\x10');
    payload.push_back('\x00'); // colors
    payload.push_back('\x00'); // reserved
    put_u16le(payload, 1);  // planes
    put_u16le(payload, 32); // bpp
    put_u32le(payload, static_cast<uint32_t>(bitmap.size()));
    put_u32le(payload, 22); // bitmap offset
    payload += bitmap;
    append_binary_pad(payload, rng, line.pad);
    rec->payload = std::move(payload);
    rec->expected_broad = expect("image", "vnd.microsoft.icon");
    rec->expected_fine = expect("image", "vnd.microsoft.icon");
}

void build_xbm(const RecipeLine& line, BuiltRecord* rec) {
    Bytes payload =
        "#define corpus_width 8\n"
        "#define corpus_height 8\n"
        "static unsigned char corpus_bits[] = {\n"
        "  0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00 };\n";
    if (line.pad > 0) {
        payload += "/* ";
        append_phrase_pad(payload, line.pad);
        payload += " */\n";
    }
    rec->payload = std::move(payload);
    rec->expected_broad = expect("image", "x-xbitmap");
    rec->expected_fine = expect("image", "x-xbitmap");
}

void build_pdf(const RecipeLine& line, BuiltRecord* rec) {
    Bytes payload = "%PDF-" + line.version + "\n";
    payload += Bytes("%\xe2\xe3\xcf\xd3\n", 6);
    payload +=
        "1 0 obj\n<< /Type /Catalog /Pages 2 0 R >>\nendobj\n"
        "2 0 obj\n<< /Type /Pages /Kids [3 0 R] /Count 1 >>\nendobj\n"
        "3 0 obj\n<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] >>\nendobj\n";
    bool has_info = !line.software.empty();
    if (has_info) {
        payload += "4 0 obj\n<< /Producer (" + escape_pdf_string(line.software) + ") >>\nendobj\n";
    }
    size_t remaining = line.pad;
    while (remaining > 0) {
        size_t take = std::min<size_t>(remaining, 76);
        payload += "% ";
        payload.append(take, 'x');
        payload += "\n";
        remaining -= take;
    }
    payload += "trailer\n<< /Size 5 /Root 1 0 R";
    if (has_info) payload += " /Info 4 0 R";
    payload += " >>\nstartxref\n0\n";
    payload += line.malform.truncate_eof ? "%%EO\n" : "%%EOF\n";
    rec->payload = std::move(payload);
    rec->expected_broad = expect("application", "pdf", line.version, line.software);
    rec->expected_fine = line.malform.truncate_eof
                             ? std::string(kUnidentifiedToken)
                             : expect("application", "pdf", line.version, line.software);
}

std::string doctype_line(const std::string& version) {
    if (version == "2.0") return "<!DOCTYPE HTML PUBLIC \"-//IETF//DTD HTML 2.0//EN\">\n";
    if (version == "3.2") return "<!DOCTYPE HTML PUBLIC \"-//W3C//DTD HTML 3.2 Final//EN\">\n";
    if (version == "4.0") {
        return "<!DOCTYPE HTML PUBLIC \"-//W3C//DTD HTML 4.0 Transitional//EN\">\n";
    }
    if (version == "4.01") {
        return "<!DOCTYPE HTML PUBLIC \"-//W3C//DTD HTML 4.01 Transitional//EN\">\n";
    }
    if (version == "xhtml-1.0") {
        return "<!DOCTYPE html PUBLIC \"-//W3C//DTD XHTML 1.0 Strict//EN\" "
               "\"http://www.w3.org/TR/xhtml1/DTD/xhtml1-strict.dtd\">\n";
    }
    return "<!DOCTYPE html PUBLIC \"-//W3C//DTD XHTML 1.1//EN\" "
           "\"http://www.w3.org/TR/xhtml11/DTD/xhtml11.dtd\">\n";
}

void build_html(const RecipeLine& line, BuiltRecord* rec, bool tagless) {
    Bytes payload;
    if (!tagless) payload += doctype_line(line.version);
    payload += "<html><head><title>sample page</title></head><body><p>";
    append_phrase_pad(payload, std::max<size_t>(line.pad, kPhrase.size()));
    payload += "</p></body></html>\n";
    rec->payload = std::move(payload);
    if (tagless) {
        rec->expected_broad = expect("text", "html");
        rec->expected_fine = expect("text", "plain");
    } else {
        rec->expected_broad = expect("text", "html", line.version);
        rec->expected_fine = expect("text", "html", line.version);
    }
}

void build_css(const RecipeLine& line, BuiltRecord* rec) {
    Bytes payload =
        "@charset \"UTF-8\";\n"
        "body { font-family: serif; color: black; }\n";
    if (line.pad > 0) {
        payload += "/* ";
        append_phrase_pad(payload, line.pad);
        payload += " */\n";
    }
    rec->payload = std::move(payload);
    rec->expected_broad = expect("text", "css");
    rec->expected_fine = expect("text", "css");
}

void build_js(const RecipeLine& line, BuiltRecord* rec) {
    Bytes payload = "function main() {\n  return 42;\n}\n";
    if (line.pad > 0) {
        payload += "/* ";
        append_phrase_pad(payload, line.pad);
        payload += " */\n";
    }
    rec->payload = std::move(payload);
    rec->expected_broad = expect("application", "javascript");
    rec->expected_fine = expect("application", "javascript");
}

void build_text(const RecipeLine& line, BuiltRecord* rec) {
    Bytes payload;
    append_phrase_pad(payload, std::max<size_t>(line.pad, kPhrase.size()));
    rec->payload = std::move(payload);
    rec->expected_broad = expect("text", "plain");
    rec->expected_fine = expect("text", "plain");
}

// Unidentifiable filler: the first byte rules out every BOF-anchored
// literal and the weak-signature offset is steered away from its value.
void build_random(const RecipeLine& line, DetRng& rng, BuiltRecord* rec) {
    size_t n = 512 + line.pad;
    Bytes payload;
    payload.reserve(n);
    for (size_t i = 0; i < n; ++i) payload.push_back(static_cast<char>(rng.next_byte()));
    payload[0] = static_cast<char>(0xa0 + (static_cast<uint8_t>(payload[0]) & 0x1f));
    if (payload.size() > 522 && payload[522] == '\x11') payload[522] = '\x12';
    rec->payload = std::move(payload);
    rec->expected_broad = std::string(kUnidentifiedToken);
    rec->expected_fine = std::string(kUnidentifiedToken);
}

struct TemplateInfo {
    const char* server_mime;
    const char* extension;
};

TemplateInfo template_info(const std::string& name) {
    if (name == "png") return {"image/png", "png"};
    if (name == "gif87a" || name == "gif89a") return {"image/gif", "gif"};
    if (name == "jpeg" || name == "jpeg_exif" || name == "jpeg_nojfif") {
        return {"image/jpeg", "jpg"};
    }
    if (name == "tiff") return {"image/tiff", "tif"};
    if (name == "bmp") return {"image/bmp", "bmp"};
    if (name == "ico") return {"image/x-icon", "ico"};
    if (name == "xbm") return {"image/x-xbitmap", "xbm"};
    if (name == "pdf") return {"application/pdf", "pdf"};
    if (name == "html" || name == "html_tagless") return {"text/html", "html"};
    if (name == "css") return {"text/css", "css"};
    if (name == "js") return {"application/x-javascript", "js"};
    if (name == "text") return {"text/plain", "txt"};
    return {"application/octet-stream", "bin"};
}

} // namespace

BuiltRecord build_record(const CorpusSpec& spec, const RecipeLine& line, uint64_t index) {
    DetRng rng(spec.seed, index);
    BuiltRecord rec;

    char stamp[16];
    std::snprintf(stamp, sizeof stamp, "%04d%02d%02d%02d%02d%02d", line.year,
                  static_cast<int>(rng.range(1, 12)), static_cast<int>(rng.range(1, 28)),
                  static_cast<int>(rng.range(0, 23)), static_cast<int>(rng.range(0, 59)),
                  static_cast<int>(rng.range(0, 59)));
    rec.timestamp = stamp;

    TemplateInfo info = template_info(line.format);
    rec.url = "http://corpus.example/y" + std::to_string(line.year) + "/r" +
              std::to_string(index) + "." + info.extension;
    if (line.malform.no_content_type) {
        rec.server_mime.clear();
    } else if (line.server_mime_set) {
        rec.server_mime = line.server_mime;
    } else {
        rec.server_mime = info.server_mime;
    }

    const std::string& t = line.format;
    if (t == "png") {
        build_png(line, rng, &rec);
    } else if (t == "gif87a") {
        build_gif(line, rng, &rec, "87a");
    } else if (t == "gif89a") {
        build_gif(line, rng, &rec, "89a");
    } else if (t == "jpeg") {
        build_jpeg(line, rng, &rec);
    } else if (t == "jpeg_exif") {
        build_jpeg_exif(line, rng, &rec);
    } else if (t == "jpeg_nojfif") {
        build_jpeg_nojfif(line, rng, &rec);
    } else if (t == "tiff") {
        build_tiff(line, rng, &rec);
    } else if (t == "bmp") {
        build_bmp(line, rng, &rec);
    } else if (t == "ico") {
        build_ico(line, rng, &rec);
    } else if (t == "xbm") {
        build_xbm(line, &rec);
    } else if (t == "pdf") {
        build_pdf(line, &rec);
    } else if (t == "html") {
        build_html(line, &rec, false);
    } else if (t == "html_tagless") {
        build_html(line, &rec, true);
    } else if (t == "css") {
        build_css(line, &rec);
    } else if (t == "js") {
        build_js(line, &rec);
    } else if (t == "text") {
        build_text(line, &rec);
    } else if (t == "random") {
        build_random(line, rng, &rec);
    } else {
        throw SpecError("unknown template: " + t);
    }
    return rec;
}

namespace {

std::string iso_date(const std::string& ts) {
    return ts.substr(0, 4) + "-" + ts.substr(4, 2) + "-" + ts.substr(6, 2) + "T" +
           ts.substr(8, 2) + ":" + ts.substr(10, 2) + ":" + ts.substr(12, 2) + "Z";
}

std::string frame_warc(const BuiltRecord& rec, uint64_t index) {
    std::string http = "HTTP/1.1 200 OK\r\n";
    if (!rec.server_mime.empty()) http += "Content-Type: " + rec.server_mime + "\r\n";
    http += "Content-Length: " + std::to_string(rec.payload.size()) + "\r\n\r\n";
    http += rec.payload;

    char uuid[48];
    std::snprintf(uuid, sizeof uuid, "%08x-0000-4000-8000-%012llx", 0u,
                  static_cast<unsigned long long>(index));

    std::string warc = "WARC/1.0\r\n";
    warc += "WARC-Type: response\r\n";
    warc += "WARC-Record-ID: <urn:uuid:" + std::string(uuid) + ">\r\n";
    warc += "WARC-Date: " + iso_date(rec.timestamp) + "\r\n";
    warc += "WARC-Target-URI: " + rec.url + "\r\n";
    warc += "Content-Type: application/http; msgtype=response\r\n";
    warc += "Content-Length: " + std::to_string(http.size()) + "\r\n\r\n";
    warc += http;
    warc += "\r\n\r\n";
    return warc;
}

Bytes gzip_member(std::string_view raw) {
    z_stream z;
    std::memset(&z, 0, sizeof z);
    if (deflateInit2(&z, 1, Z_DEFLATED, 31, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        throw IoError("zlib deflate init failed");
    }
    Bytes out(deflateBound(&z, static_cast<uLong>(raw.size())) + 32, '\0');
    z.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(raw.data()));
    z.avail_in = static_cast<uInt>(raw.size());
    z.next_out = reinterpret_cast<Bytef*>(out.data());
    z.avail_out = static_cast<uInt>(out.size());
    int rc = deflate(&z, Z_FINISH);
    uLong produced = z.total_out;
    deflateEnd(&z);
    if (rc != Z_STREAM_END) throw IoError("zlib deflate failed");
    out.resize(produced);
    return out;
}

// ---- corpus spec JSON -------------------------------------------------

[[noreturn]] void spec_fail(const std::string& where, const std::string& why) {
    throw SpecError(where + ": " + why);
}

uint64_t spec_uint(const json& node, const std::string& where, uint64_t max_value) {
    if (!node.is_number_unsigned()) spec_fail(where, "expected a non-negative integer");
    uint64_t value = node.get<uint64_t>();
    if (value > max_value) spec_fail(where, "value too large");
    return value;
}

std::string spec_string(const json& node, const std::string& where, size_t max_len) {
    if (!node.is_string()) spec_fail(where, "expected a string");
    std::string value = node.get<std::string>();
    if (value.size() > max_len) spec_fail(where, "string too long");
    for (char c : value) {
        auto u = static_cast<unsigned char>(c);
        if (u < 0x20 || u == 0x7f) spec_fail(where, "control characters not allowed");
    }
    if (std::string(trim(value)) != value) {
        spec_fail(where, "leading or trailing whitespace not allowed");
    }
    return value;
}

const std::set<std::string> kPdfVersions = {"1.0", "1.1", "1.2", "1.3",
                                            "1.4", "1.5", "1.6", "1.7"};
const std::set<std::string> kHtmlVersions = {"2.0", "3.2", "4.0", "4.01", "xhtml-1.0",
                                             "xhtml-1.1"};

} // namespace

CorpusSpec CorpusSpec::from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw SpecError(std::string("corpus spec is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw SpecError("corpus spec must be a JSON object");

    CorpusSpec spec;
    if (root.contains("seed")) {
        spec.seed = spec_uint(root["seed"], "seed", UINT64_MAX);
    }
    if (root.contains("records_per_file")) {
        spec.records_per_file = spec_uint(root["records_per_file"], "records_per_file", 1u << 24);
        if (spec.records_per_file == 0) spec_fail("records_per_file", "must be at least 1");
    }
    if (!root.contains("recipe") || !root["recipe"].is_array()) {
        throw SpecError("corpus spec needs a recipe array");
    }

    size_t n = 0;
    for (const auto& node : root["recipe"]) {
        std::string where = "recipe[" + std::to_string(n++) + "]";
        if (!node.is_object()) spec_fail(where, "expected an object");
        RecipeLine line;

        if (!node.contains("year")) spec_fail(where, "missing year");
        line.year = static_cast<int>(spec_uint(node["year"], where + ".year", 2100));
        if (line.year < 1994) spec_fail(where + ".year", "must be in [1994, 2100]");

        if (!node.contains("template")) spec_fail(where, "missing template");
        line.format = spec_string(node["template"], where + ".template", 32);
        if (std::find(kTemplateNames.begin(), kTemplateNames.end(), line.format) ==
            kTemplateNames.end()) {
            spec_fail(where + ".template", "unknown template " + line.format);
        }

        if (!node.contains("count")) spec_fail(where, "missing count");
        line.count = spec_uint(node["count"], where + ".count", 100000000);

        bool is_pdf = line.format == "pdf";
        bool is_html = line.format == "html";
        bool has_exif = line.format == "jpeg_exif" || line.format == "tiff";

        if (node.contains("version")) {
            line.version = spec_string(node["version"], where + ".version", 16);
            if (!is_pdf && !is_html) {
                spec_fail(where + ".version", "not applicable to template " + line.format);
            }
        }
        if (is_pdf) {
            if (line.version.empty()) line.version = "1.4";
            if (!kPdfVersions.contains(line.version)) {
                spec_fail(where + ".version", "pdf version must be 1.0 through 1.7");
            }
        }
        if (is_html) {
            if (line.version.empty()) line.version = "3.2";
            if (!kHtmlVersions.contains(line.version)) {
                spec_fail(where + ".version", "unknown html version " + line.version);
            }
        }

        if (node.contains("software")) {
            line.software = spec_string(node["software"], where + ".software", 100);
            if (!is_pdf && !has_exif) {
                spec_fail(where + ".software", "not applicable to template " + line.format);
            }
        }
        if (node.contains("make")) {
            line.make = spec_string(node["make"], where + ".make", 100);
            if (!has_exif) spec_fail(where + ".make", "not applicable to template " + line.format);
        }
        if (node.contains("model")) {
            line.model = spec_string(node["model"], where + ".model", 100);
            if (!has_exif) spec_fail(where + ".model", "not applicable to template " + line.format);
        }
        if (node.contains("truncate_eof")) {
            if (!node["truncate_eof"].is_boolean()) spec_fail(where + ".truncate_eof", "expected a boolean");
            line.malform.truncate_eof = node["truncate_eof"].get<bool>();
            if (line.malform.truncate_eof && !is_pdf) {
                spec_fail(where + ".truncate_eof", "only applicable to pdf");
            }
        }
        if (node.contains("no_content_type")) {
            if (!node["no_content_type"].is_boolean()) {
                spec_fail(where + ".no_content_type", "expected a boolean");
            }
            line.malform.no_content_type = node["no_content_type"].get<bool>();
        }
        if (node.contains("pad")) {
            line.pad = static_cast<size_t>(spec_uint(node["pad"], where + ".pad", 16u << 20));
        }
        if (node.contains("server_mime")) {
            line.server_mime = spec_string(node["server_mime"], where + ".server_mime", 120);
            line.server_mime_set = true;
        }
        spec.recipe.push_back(std::move(line));
    }
    return spec;
}

CorpusSpec CorpusSpec::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

ProfileDataset GroundTruthManifest::expected_profile() const {
    ProfileDataset dataset;
    for (const auto& entry : entries_) {
        dataset.add(ProfileKey{normalize_server_mime(entry.server_mime), entry.expected_broad,
                               entry.expected_fine, extract_year(entry.timestamp)});
    }
    return dataset;
}

void GroundTruthManifest::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "# index\turl\ttimestamp\tserver_mime\texpected_broad\texpected_fine\t"
           "payload_size\tpayload_crc32\n";
    for (const auto& e : entries_) {
        out << e.index << '\t' << e.url << '\t' << e.timestamp << '\t' << e.server_mime << '\t'
            << e.expected_broad << '\t' << e.expected_fine << '\t' << e.payload_size << '\t'
            << e.payload_crc32 << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed for " + path);
}

GroundTruthManifest GroundTruthManifest::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    GroundTruthManifest manifest;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        size_t start = 0;
        while (start <= line.size()) {
            size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (fields.size() != 8) throw ParseError(line_no, "expected 8 TAB-separated fields");
        try {
            ManifestEntry entry;
            entry.index = std::stoull(fields[0]);
            entry.url = fields[1];
            entry.timestamp = fields[2];
            entry.server_mime = fields[3];
            entry.expected_broad = fields[4];
            entry.expected_fine = fields[5];
            entry.payload_size = std::stoull(fields[6]);
            entry.payload_crc32 = static_cast<uint32_t>(std::stoul(fields[7]));
            manifest.add(std::move(entry));
        } catch (const std::exception&) {
            throw ParseError(line_no, "malformed manifest fields");
        }
    }
    return manifest;
}

GenerateResult generate(const CorpusSpec& spec, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir);

    GenerateResult result;
    std::ofstream out;
    uint64_t index = 0;
    uint64_t in_file = 0;

    auto roll_file = [&]() {
        if (out.is_open()) {
            out.flush();
            if (!out) throw IoError("write failed in " + out_dir);
            out.close();
        }
        char name[32];
        std::snprintf(name, sizeof name, "part-%05zu.warc.gz", result.archive_files.size());
        std::string path = out_dir + "/" + name;
        out.open(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path);
        result.archive_files.push_back(path);
        in_file = 0;
    };

    for (const auto& line : spec.recipe) {
        for (uint64_t i = 0; i < line.count; ++i, ++index) {
            if (!out.is_open() || in_file == spec.records_per_file) roll_file();
            BuiltRecord rec = build_record(spec, line, index);
            Bytes member = gzip_member(frame_warc(rec, index));
            out.write(member.data(), static_cast<std::streamsize>(member.size()));

            ManifestEntry entry;
            entry.index = index;
            entry.url = rec.url;
            entry.timestamp = rec.timestamp;
            entry.server_mime = rec.server_mime;
            entry.expected_broad = rec.expected_broad;
            entry.expected_fine = rec.expected_fine;
            entry.payload_size = rec.payload.size();
            entry.payload_crc32 = crc32_of(rec.payload);
            result.manifest.add(std::move(entry));
            ++in_file;
        }
    }
    if (out.is_open()) {
        out.flush();
        if (!out) throw IoError("write failed in " + out_dir);
        out.close();
    }

    result.manifest_path = out_dir + "/manifest.tsv";
    result.manifest.save_file(result.manifest_path);
    log_info("generated " + std::to_string(index) + " records in " +
             std::to_string(result.archive_files.size()) + " archive files under " + out_dir);
    return result;
}

} // namespace formatscope
