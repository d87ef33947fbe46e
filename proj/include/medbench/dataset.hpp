#pragma once

#include "medbench/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace medbench::dataset {

enum class Split { unassigned, train, val, test };

std::string_view to_string(Split s);  // "-" for unassigned
Split parse_split(std::string_view text);

struct Sample {
    std::string sample_id;
    std::filesystem::path image_path;  // relative to the manifest root
    std::string ground_truth;
    Split split = Split::unassigned;
};

/// A dataset is referenced by a manifest; images stay where the user put them.
///
/// Text format (UTF-8, one record per line, `#` comments and blank lines ignored):
///
///     dataset_id=covid-radiography
///     modality=xray
///     labels=covid,normal,lung opacity,viral pneumonia
///     s0001<TAB>images/s0001.png<TAB>normal<TAB>train
///
/// `labels=` may be omitted, in which case the modality's preset is used.
/// The split column is one of train, val, test or `-` (unassigned).
/// root_dir is the directory holding the manifest.
struct DatasetManifest {
    std::string dataset_id;
    Modality modality = Modality::xray;
    LabelSet label_set;
    std::vector<Sample> samples;
    std::filesystem::path root_dir;

    std::vector<Sample> in_split(Split s) const;
    GroundTruths ground_truths() const;
    const Sample* find(std::string_view sample_id) const;
    bool fully_assigned() const;
};

/// Manifest problems carry the offending line/sample in the message.
class ManifestError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& root_dir,
                               std::string_view source_name = "<manifest>");
std::string format_manifest(const DatasetManifest& manifest);

/// Throws ManifestError on the first violated invariant.
void validate(const DatasetManifest& manifest);

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

SplitRatios parse_ratios(std::string_view text);  // "0.8,0.1,0.1"

/// Stratified per label. Within a label, sample ids are sorted, then shuffled
/// with a seeded Fisher-Yates over mt19937_64 (own bounded draw, so the result
/// does not depend on the standard library's distributions). Counts per label
/// use largest-remainder rounding, so each differs from ratio x count by < 1.
DatasetManifest assign_splits(DatasetManifest manifest, const SplitRatios& ratios,
                              std::uint64_t seed);

enum class MediaType { png, jpeg };

std::string_view mime_type(MediaType t);

struct ImagePayload {
    std::string sample_id;
    MediaType media_type = MediaType::png;
    std::string bytes_base64;

    std::string data_url() const;
};

class ImageError : public RunError {
public:
    using RunError::RunError;
};

/// Detects the format from magic bytes; the file extension is ignored.
std::optional<MediaType> sniff_media_type(std::span<const unsigned char> bytes);

ImagePayload encode_image(const Sample& sample, const DatasetManifest& manifest);

/// Lexical check that `relative` stays under the root (no absolute paths, no
/// leading `..` after normalization).
bool is_contained_path(const std::filesystem::path& relative);

}  // namespace medbench::dataset
