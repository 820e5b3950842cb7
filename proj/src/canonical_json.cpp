#include "ehc/canonical_json.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace ehc {
namespace {

std::string format_fixed6(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite number in canonical JSON");
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 6);
    if (ec != std::errc{}) throw std::invalid_argument("number too large for canonical JSON");
    std::string out(buf.data(), ptr);
    if (out == "-0.000000") out = "0.000000";
    return out;
}

void write(const Json& v, std::string& out) {
    switch (v.type()) {
        case Json::value_t::object: {
            out.push_back('{');
            bool first = true;
            // nlohmann::json objects are std::map-backed: iteration is key-sorted.
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out.push_back(',');
                first = false;
                out += Json(it.key()).dump();
                out.push_back(':');
                write(it.value(), out);
            }
            out.push_back('}');
            break;
        }
        case Json::value_t::array: {
            out.push_back('[');
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out.push_back(',');
                write(v[i], out);
            }
            out.push_back(']');
            break;
        }
        case Json::value_t::number_float:
            out += format_fixed6(v.get<double>());
            break;
        case Json::value_t::string:
            out += v.dump(-1, ' ', false, Json::error_handler_t::strict);
            break;
        default:
            out += v.dump();
            break;
    }
}

}  // namespace

std::string canonical_dump(const Json& value) {
    std::string out;
    write(value, out);
    return out;
}

double quantize6(double value) {
    const std::string text = format_fixed6(value);
    double out = 0.0;
    std::from_chars(text.data(), text.data() + text.size(), out);
    return out;
}

}  // namespace ehc
