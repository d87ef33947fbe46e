#include "medbench/core.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <charconv>
#include <ctime>

namespace medbench {

namespace {
bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize_label(std::string_view label) {
    std::string out;
    out.reserve(label.size());
    bool pending_space = false;
    for (char c : label) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
    return out;
}

bool same_label(std::string_view a, std::string_view b) {
    return normalize_label(a) == normalize_label(b);
}

std::optional<std::size_t> find_label(const LabelSet& labels, std::string_view label) {
    const auto key = normalize_label(label);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (normalize_label(labels[i]) == key) return i;
    }
    return std::nullopt;
}

std::string_view to_string(Modality m) {
    switch (m) {
    case Modality::xray: return "xray";
    case Modality::ct: return "ct";
    case Modality::mri: return "mri";
    }
    return "xray";
}

Modality parse_modality(std::string_view text) {
    const auto key = normalize_label(text);
    if (key == "xray") return Modality::xray;
    if (key == "ct") return Modality::ct;
    if (key == "mri") return Modality::mri;
    throw ConfigError(fmt::format("unknown modality '{}' (expected xray, ct or mri)", text));
}

std::string_view describe(Modality m) {
    switch (m) {
    case Modality::xray: return "chest X-ray";
    case Modality::ct: return "chest CT scan";
    case Modality::mri: return "brain MRI";
    }
    return "medical";
}

LabelSet preset_labels(Modality m) {
    switch (m) {
    case Modality::xray: return {"covid", "normal", "lung opacity", "viral pneumonia"};
    case Modality::mri: return {"glioma", "meningioma", "pituitary", "no tumor"};
    case Modality::ct:
        return {"normal", "adenocarcinoma", "large cell carcinoma", "squamous cell carcinoma"};
    }
    return {};
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) return fmt::format("{}", value);
    return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view text) {
    auto s = trim(text);
    if (s.empty()) return std::nullopt;
    const char* first = s.data();
    if (*first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
    using namespace std::chrono;
    const auto secs = time_point_cast<seconds>(t);
    const auto millis = duration_cast<milliseconds>(t - secs).count();
    const std::time_t tt = system_clock::to_time_t(secs);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", tm, static_cast<int>(millis));
}

}  // namespace medbench
