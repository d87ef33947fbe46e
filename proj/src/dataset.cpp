#include "medbench/dataset.hpp"

#include "medbench/base64.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace medbench::dataset {

namespace fs = std::filesystem;

std::string_view to_string(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "-";
    }
    return "-";
}

Split parse_split(std::string_view text) {
    const auto key = normalize_label(text);
    if (key == "train") return Split::train;
    if (key == "val") return Split::val;
    if (key == "test") return Split::test;
    if (key == "-" || key.empty()) return Split::unassigned;
    throw ConfigError(fmt::format("unknown split '{}' (expected train, val, test or -)", text));
}

std::vector<Sample> DatasetManifest::in_split(Split s) const {
    std::vector<Sample> out;
    std::copy_if(samples.begin(), samples.end(), std::back_inserter(out),
                 [s](const Sample& x) { return x.split == s; });
    return out;
}

GroundTruths DatasetManifest::ground_truths() const {
    GroundTruths out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.emplace(s.sample_id, s.ground_truth);
    return out;
}

const Sample* DatasetManifest::find(std::string_view sample_id) const {
    for (const auto& s : samples)
        if (s.sample_id == sample_id) return &s;
    return nullptr;
}

bool DatasetManifest::fully_assigned() const {
    return std::none_of(samples.begin(), samples.end(),
                        [](const Sample& s) { return s.split == Split::unassigned; });
}

bool is_contained_path(const fs::path& relative) {
    if (relative.empty() || relative.is_absolute() || relative.has_root_name()) return false;
    const auto norm = relative.lexically_normal();
    if (norm.empty()) return false;
    const auto first = *norm.begin();
    return first != ".." && norm != ".";
}

void validate(const DatasetManifest& m) {
    if (m.dataset_id.empty()) throw ManifestError("manifest: dataset_id is empty");
    if (m.label_set.empty()) throw ManifestError("manifest: label_set is empty");
    std::set<std::string> seen_labels;
    for (const auto& label : m.label_set) {
        const auto key = normalize_label(label);
        if (key.empty()) throw ManifestError("manifest: empty label in label_set");
        if (key == kUnparsed)
            throw ManifestError(fmt::format("manifest: label '{}' is reserved", label));
        if (!seen_labels.insert(key).second)
            throw ManifestError(fmt::format("manifest: duplicate label '{}'", label));
    }
    std::unordered_set<std::string> ids;
    for (const auto& s : m.samples) {
        if (s.sample_id.empty()) throw ManifestError("manifest: sample with empty sample_id");
        if (!ids.insert(s.sample_id).second)
            throw ManifestError(fmt::format("manifest: duplicate sample id '{}'", s.sample_id));
        if (!find_label(m.label_set, s.ground_truth))
            throw ManifestError(fmt::format(
                "manifest: sample '{}' has label '{}' which is not in the label set",
                s.sample_id, s.ground_truth));
        if (!is_contained_path(s.image_path))
            throw ManifestError(fmt::format("manifest: sample '{}' image path '{}' escapes the root",
                                            s.sample_id, s.image_path.string()));
    }
}

namespace {

std::vector<std::string> split_on(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(text.substr(start));
            break;
        }
        out.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text, const fs::path& root_dir,
                               std::string_view source_name) {
    DatasetManifest m;
    m.root_dir = root_dir;
    std::optional<std::string> dataset_id, modality, labels;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto where = [&] { return fmt::format("{}:{}", source_name, line_no); };

        if (trim(line).empty() || trim(line).front() == '#') continue;

        if (line.find('\t') != std::string_view::npos) {
            auto fields = split_on(line, '\t');
            if (fields.size() != 4)
                throw ManifestError(fmt::format(
                    "{}: sample line has {} fields, expected 4 "
                    "(sample_id, relative_path, ground_truth, split)",
                    where(), fields.size()));
            Sample s;
            s.sample_id = trim(fields[0]);
            s.image_path = fs::path(trim(fields[1]));
            s.ground_truth = trim(fields[2]);
            if (s.sample_id.empty()) throw ManifestError(where() + ": missing sample_id");
            if (s.ground_truth.empty())
                throw ManifestError(
                    fmt::format("{}: sample '{}' is missing ground_truth", where(), s.sample_id));
            try {
                s.split = parse_split(fields[3]);
            } catch (const ConfigError& e) {
                throw ManifestError(fmt::format("{}: sample '{}': {}", where(), s.sample_id, e.what()));
            }
            m.samples.push_back(std::move(s));
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ManifestError(fmt::format("{}: expected 'key=value' header or a tab-separated sample", where()));
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        std::optional<std::string>* slot = nullptr;
        if (key == "dataset_id") slot = &dataset_id;
        else if (key == "modality") slot = &modality;
        else if (key == "labels") slot = &labels;
        else throw ManifestError(fmt::format("{}: unknown field '{}'", where(), key));
        if (slot->has_value()) throw ManifestError(fmt::format("{}: field '{}' given twice", where(), key));
        *slot = value;
    }

    if (!dataset_id) throw ManifestError(fmt::format("{}: missing field 'dataset_id'", source_name));
    if (!modality) throw ManifestError(fmt::format("{}: missing field 'modality'", source_name));
    m.dataset_id = *dataset_id;
    try {
        m.modality = parse_modality(*modality);
    } catch (const ConfigError& e) {
        throw ManifestError(fmt::format("{}: {}", source_name, e.what()));
    }
    if (labels) {
        for (auto& l : split_on(*labels, ',')) {
            auto t = trim(l);
            if (t.empty()) throw ManifestError(fmt::format("{}: empty entry in 'labels'", source_name));
            m.label_set.push_back(std::move(t));
        }
    } else {
        m.label_set = preset_labels(m.modality);
    }
    validate(m);
    return m;
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ManifestError(fmt::format("manifest not found or unreadable: {}", path.string()));
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto root = path.parent_path();
    if (root.empty()) root = ".";
    return parse_manifest(text, root, path.string());
}

std::string format_manifest(const DatasetManifest& m) {
    std::string out;
    out += fmt::format("dataset_id={}\n", m.dataset_id);
    out += fmt::format("modality={}\n", to_string(m.modality));
    out += fmt::format("labels={}\n", fmt::join(m.label_set, ","));
    for (const auto& s : m.samples)
        out += fmt::format("{}\t{}\t{}\t{}\n", s.sample_id, s.image_path.generic_string(),
                           s.ground_truth, to_string(s.split));
    return out;
}

SplitRatios parse_ratios(std::string_view text) {
    auto parts = split_on(text, ',');
    if (parts.size() != 3) throw ConfigError(fmt::format("split ratios '{}' need three comma-separated values", text));
    double v[3];
    for (int i = 0; i < 3; ++i) {
        auto d = parse_double(parts[i]);
        if (!d) throw ConfigError(fmt::format("split ratio '{}' is not a number", parts[i]));
        v[i] = *d;
    }
    return {v[0], v[1], v[2]};
}

namespace {

// Uniform integer in [0, bound) by rejection; identical on every platform.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::mt19937_64::max() - (std::mt19937_64::max() % bound);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& r) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
        const double exact = r[k] * static_cast<double>(n);
        counts[k] = static_cast<std::size_t>(std::floor(exact));
        frac[k] = exact - std::floor(exact);
        assigned += counts[k];
    }
    // Largest remainder; ties go to the earlier split; zero-ratio splits never grow.
    while (assigned < n) {
        int best = -1;
        for (int k = 0; k < 3; ++k) {
            if (r[k] <= 0.0) continue;
            if (best < 0 || frac[k] > frac[best]) best = k;
        }
        ++counts[best];
        frac[best] = -1.0;
        ++assigned;
    }
    while (assigned > n) {  // only reachable through rounding noise
        for (int k = 2; k >= 0 && assigned > n; --k)
            if (counts[k] > 0) { --counts[k]; --assigned; }
    }
    return counts;
}

}  // namespace

DatasetManifest assign_splits(DatasetManifest m, const SplitRatios& ratios, std::uint64_t seed) {
    const std::array<double, 3> r{ratios.train, ratios.val, ratios.test};
    for (double x : r)
        if (!(x >= 0.0)) throw ConfigError("split ratios must be non-negative");
    if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9)
        throw ConfigError(fmt::format("split ratios {},{},{} do not sum to 1", r[0], r[1], r[2]));
    const auto nonzero = static_cast<std::size_t>(std::count_if(r.begin(), r.end(), [](double x) { return x > 0.0; }));

    std::mt19937_64 rng(seed);
    static constexpr Split kOrder[3] = {Split::train, Split::val, Split::test};

    for (std::size_t li = 0; li < m.label_set.size(); ++li) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < m.samples.size(); ++i)
            if (find_label(m.label_set, m.samples[i].ground_truth) == li) members.push_back(i);
        if (members.empty()) continue;
        if (members.size() < nonzero)
            throw ConfigError(fmt::format("label '{}' has {} samples, fewer than the {} non-empty splits",
                                          m.label_set[li], members.size(), nonzero));
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            return m.samples[a].sample_id < m.samples[b].sample_id;
        });
        for (std::size_t i = members.size() - 1; i > 0; --i)
            std::swap(members[i], members[bounded(rng, i + 1)]);

        const auto counts = split_counts(members.size(), r);
        std::size_t cursor = 0;
        for (int k = 0; k < 3; ++k)
            for (std::size_t c = 0; c < counts[k]; ++c) m.samples[members[cursor++]].split = kOrder[k];
    }
    return m;
}

std::string_view mime_type(MediaType t) {
    return t == MediaType::png ? "image/png" : "image/jpeg";
}

std::string ImagePayload::data_url() const {
    return fmt::format("data:{};base64,{}", mime_type(media_type), bytes_base64);
}

std::optional<MediaType> sniff_media_type(std::span<const unsigned char> b) {
    static constexpr unsigned char kPng[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (b.size() >= 8 && std::equal(kPng, kPng + 8, b.begin())) return MediaType::png;
    if (b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF) return MediaType::jpeg;
    return std::nullopt;
}

ImagePayload encode_image(const Sample& sample, const DatasetManifest& manifest) {
    if (!is_contained_path(sample.image_path))
        throw ImageError(fmt::format("sample '{}': image path escapes the dataset root", sample.sample_id));
    const auto full = manifest.root_dir / sample.image_path;
    std::ifstream in(full, std::ios::binary);
    if (!in) throw ImageError(fmt::format("sample '{}': cannot read {}", sample.sample_id, full.string()));
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto type = sniff_media_type(bytes);
    if (!type)
        throw ImageError(fmt::format("sample '{}': unsupported image format in {} (need PNG or JPEG)",
                                     sample.sample_id, full.string()));
    return ImagePayload{sample.sample_id, *type, base64::encode(bytes)};
}

}  // namespace medbench::dataset
