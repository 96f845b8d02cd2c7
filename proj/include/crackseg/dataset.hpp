#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crackseg/image.hpp"

namespace crackseg {

enum class DatasetKind { cfd, ct260, crkwh100, stone331, deepcrack_db };
enum class Split { train, test };

std::string to_string(DatasetKind kind);
std::string to_string(Split split);
DatasetKind parse_dataset_kind(const std::string& s);

struct ManifestEntry {
    Split split = Split::train;
    std::filesystem::path image;
    std::filesystem::path mask;
    std::optional<std::filesystem::path> region;

    bool operator==(const ManifestEntry&) const = default;
};

/// Train/test listing of one dataset with its evaluation rules.
///
/// Text form (UTF-8): three header lines `# name\t<name>`, `# color-mode\t<grayscale|rgb>`,
/// `# tolerance\t<0|2>`, then one entry per line: split, image path, mask path and region
/// path or "-", separated by tabs.
struct DatasetManifest {
    std::string name;
    ColorMode color = ColorMode::grayscale;
    int tolerance = 2;
    std::vector<ManifestEntry> entries;

    std::vector<ManifestEntry> entries_for(Split split) const;
    std::size_t count(Split split) const;

    /// Checks: tolerance in {0, 2}, no duplicate image paths.
    void validate() const;

    std::string serialize() const;
    static DatasetManifest parse(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static DatasetManifest load(const std::filesystem::path& path);

    bool operator==(const DatasetManifest&) const = default;
};

/// Scans a dataset directory.
///
/// Layouts (masks are matched to images by file stem):
///   CFD, CT260, CRKWH100: images/, masks/
///   Stone331:             images/, masks/, regions/
///   DeepCrack-DB:         train_img/, train_lab/, test_img/, test_lab/
///                         or images/, masks/ and split.txt (`<stem>\t<train|test>` per line)
/// Split rules: CFD drops 042, 001-072 train and the rest test, grayscale; CT260 train only;
/// CRKWH100 and Stone331 test only; DeepCrack-DB keeps RGB and uses tolerance 0.
DatasetManifest build_manifest(const std::filesystem::path& root, DatasetKind kind);

struct LoadedPair {
    ImageTensor image;
    BinaryMask mask;
    std::optional<BinaryMask> region;
};

/// Decodes one entry: image normalised to [0,1] in `color`, masks binarised at half scale.
LoadedPair load_pair(const ManifestEntry& entry, ColorMode color);

}  // namespace crackseg
