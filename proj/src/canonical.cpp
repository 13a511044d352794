#include "cotour/canonical.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace cotour {

namespace {

/// Same escaping as json::dump: short forms for the usual controls, \u00xx
/// for the rest, UTF-8 passed through.
void quote(const std::string& s, std::string& out)
{
    out += '"';
    for (const char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\b': out += "\\b"; break;
        case '\f': out += "\\f"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(c));
                out += buf;
            } else {
                out += c;
            }
        }
    }
    out += '"';
}

void dump(const json& j, std::string& out)
{
    switch (j.type()) {
    case json::value_t::object: {
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) {
                out += ',';
            }
            first = false;
            quote(it.key(), out);
            out += ':';
            dump(*it, out);
        }
        out += '}';
        break;
    }
    case json::value_t::array: {
        out += '[';
        bool first = true;
        for (const auto& v : j) {
            if (!first) {
                out += ',';
            }
            first = false;
            dump(v, out);
        }
        out += ']';
        break;
    }
    case json::value_t::number_float: {
        double v = j.get<double>();
        if (v == 0.0) {
            v = 0.0;
        }
        if (!std::isfinite(v)) {
            out += "null";
            break;
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.9g", v);
        out += buf;
        break;
    }
    case json::value_t::string:
        quote(j.get_ref<const std::string&>(), out);
        break;
    case json::value_t::number_unsigned:
        out += std::to_string(j.get<std::uint64_t>());
        break;
    case json::value_t::number_integer:
        out += std::to_string(j.get<std::int64_t>());
        break;
    case json::value_t::boolean:
        out += j.get<bool>() ? "true" : "false";
        break;
    default:
        out += j.dump();
    }
}

} // namespace

std::string canonical_dump(const json& j)
{
    std::string out;
    out.reserve(8192);
    dump(j, out);
    return out;
}

std::string sha256_hex(std::string_view bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xf];
    }
    return out;
}

std::string canonical_hash(const json& j) { return sha256_hex(canonical_dump(j)); }

} // namespace cotour
