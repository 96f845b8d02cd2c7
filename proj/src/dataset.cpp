#include "crackseg/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace crackseg {

namespace fs = std::filesystem;

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::cfd: return "CFD";
        case DatasetKind::ct260: return "CT260";
        case DatasetKind::crkwh100: return "CRKWH100";
        case DatasetKind::stone331: return "Stone331";
        case DatasetKind::deepcrack_db: return "DeepCrack-DB";
    }
    return "?";
}

std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

DatasetKind parse_dataset_kind(const std::string& s) {
    std::string k;
    for (char c : s) {
        if (c != '-' && c != '_') k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (k == "cfd" || k == "crackforest") return DatasetKind::cfd;
    if (k == "ct260" || k == "cracktree260") return DatasetKind::ct260;
    if (k == "crkwh100") return DatasetKind::crkwh100;
    if (k == "stone331") return DatasetKind::stone331;
    if (k == "deepcrackdb" || k == "deepcrack") return DatasetKind::deepcrack_db;
    throw ConfigError("unknown dataset kind '" + s + "' (CFD | CT260 | CRKWH100 | Stone331 | DeepCrack-DB)");
}

std::vector<ManifestEntry> DatasetManifest::entries_for(Split split) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries) {
        if (e.split == split) out.push_back(e);
    }
    return out;
}

std::size_t DatasetManifest::count(Split split) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) { return e.split == split; }));
}

void DatasetManifest::validate() const {
    if (tolerance != 0 && tolerance != 2) {
        throw IngestionError("manifest '" + name + "': tolerance must be 0 or 2");
    }
    std::set<std::string> seen;
    for (const auto& e : entries) {
        if (!seen.insert(e.image.generic_string()).second) {
            throw IngestionError("manifest '" + name + "': duplicate image " + e.image.generic_string());
        }
    }
}

std::string DatasetManifest::serialize() const {
    std::ostringstream os;
    os << "# name\t" << name << '\n';
    os << "# color-mode\t" << (color == ColorMode::rgb ? "rgb" : "grayscale") << '\n';
    os << "# tolerance\t" << tolerance << '\n';
    for (const auto& e : entries) {
        os << to_string(e.split) << '\t' << e.image.generic_string() << '\t' << e.mask.generic_string() << '\t'
           << (e.region ? e.region->generic_string() : std::string("-")) << '\n';
    }
    return os.str();
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

}  // namespace

DatasetManifest DatasetManifest::parse(const std::string& text) {
    DatasetManifest m;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (line.rfind("# ", 0) == 0) {
            const std::string key = fields[0].substr(2);
            const std::string value = fields.size() > 1 ? fields[1] : "";
            if (key == "name") {
                m.name = value;
            } else if (key == "color-mode") {
                if (value != "rgb" && value != "grayscale") {
                    throw IngestionError("manifest line " + std::to_string(lineno) + ": bad color mode");
                }
                m.color = value == "rgb" ? ColorMode::rgb : ColorMode::grayscale;
            } else if (key == "tolerance") {
                try {
                    m.tolerance = std::stoi(value);
                } catch (const std::exception&) {
                    throw IngestionError("manifest line " + std::to_string(lineno) + ": bad tolerance");
                }
            }
            continue;
        }
        if (fields.size() != 4 || (fields[0] != "train" && fields[0] != "test")) {
            throw IngestionError("manifest line " + std::to_string(lineno) +
                                 ": expected split, image, mask, region separated by tabs");
        }
        ManifestEntry e;
        e.split = fields[0] == "train" ? Split::train : Split::test;
        e.image = fields[1];
        e.mask = fields[2];
        if (fields[3] != "-") e.region = fs::path(fields[3]);
        m.entries.push_back(std::move(e));
    }
    m.validate();
    return m;
}

void DatasetManifest::save(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write manifest " + path.string());
    os << serialize();
}

DatasetManifest DatasetManifest::load(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IngestionError("cannot read manifest " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

// --- Directory scanning ------------------------------------------------------------

namespace {

const std::array<std::string, 7> kImageExtensions = {".jpg", ".jpeg", ".png", ".bmp", ".tif", ".tiff", ".pgm"};

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return std::find(kImageExtensions.begin(), kImageExtensions.end(), ext) != kImageExtensions.end();
}

fs::path require_dir(const fs::path& root, const std::string& name) {
    const fs::path d = root / name;
    if (!fs::is_directory(d)) throw IngestionError("expected directory " + d.string());
    return d;
}

/// Image files of a directory, sorted by file name.
std::vector<fs::path> list_images(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& de : fs::directory_iterator(dir)) {
        if (de.is_regular_file() && is_image_file(de.path())) out.push_back(de.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Stem -> path map of a directory of masks.
std::map<std::string, fs::path> index_by_stem(const fs::path& dir) {
    std::map<std::string, fs::path> out;
    for (const auto& p : list_images(dir)) {
        const auto [it, inserted] = out.emplace(p.stem().string(), p);
        if (!inserted) {
            throw IngestionError("ambiguous files for stem '" + p.stem().string() + "' in " + dir.string());
        }
    }
    return out;
}

fs::path match(const std::map<std::string, fs::path>& index, const fs::path& image, const fs::path& dir) {
    const auto it = index.find(image.stem().string());
    if (it == index.end()) {
        throw IngestionError("missing mask for " + image.string() + " in " + dir.string());
    }
    return it->second;
}

void check_decodable(const fs::path& p) {
    if (!has_image_signature(p)) throw IngestionError("malformed or unreadable image: " + p.string());
}

void add_split(DatasetManifest& m, const fs::path& image_dir, const fs::path& mask_dir, Split split,
               const std::optional<fs::path>& region_dir, const std::function<bool(const fs::path&)>& keep) {
    const auto masks = index_by_stem(mask_dir);
    std::map<std::string, fs::path> regions;
    if (region_dir) regions = index_by_stem(*region_dir);
    for (const auto& img : list_images(image_dir)) {
        if (keep && !keep(img)) continue;
        check_decodable(img);
        ManifestEntry e;
        e.split = split;
        e.image = img;
        e.mask = match(masks, img, mask_dir);
        check_decodable(e.mask);
        if (region_dir) {
            e.region = match(regions, img, *region_dir);
            check_decodable(*e.region);
        }
        m.entries.push_back(std::move(e));
    }
}

int numeric_stem(const fs::path& p) {
    const std::string s = p.stem().string();
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
        throw IngestionError("CFD image names must be numeric (e.g. 001.jpg): " + p.string());
    }
    return std::stoi(s);
}

}  // namespace

DatasetManifest build_manifest(const fs::path& root, DatasetKind kind) {
    if (!fs::is_directory(root)) throw IngestionError("dataset root is not a directory: " + root.string());
    DatasetManifest m;
    m.name = to_string(kind);
    m.color = ColorMode::grayscale;
    m.tolerance = 2;

    switch (kind) {
        case DatasetKind::cfd: {
            const fs::path images = require_dir(root, "images");
            const fs::path masks = require_dir(root, "masks");
            add_split(m, images, masks, Split::train, std::nullopt, [](const fs::path& p) {
                const int n = numeric_stem(p);
                return n != 42 && n <= 72;
            });
            add_split(m, images, masks, Split::test, std::nullopt, [](const fs::path& p) {
                const int n = numeric_stem(p);
                return n != 42 && n > 72;
            });
            break;
        }
        case DatasetKind::ct260:
            add_split(m, require_dir(root, "images"), require_dir(root, "masks"), Split::train, std::nullopt, {});
            break;
        case DatasetKind::crkwh100:
            add_split(m, require_dir(root, "images"), require_dir(root, "masks"), Split::test, std::nullopt, {});
            break;
        case DatasetKind::stone331:
            add_split(m, require_dir(root, "images"), require_dir(root, "masks"), Split::test,
                      require_dir(root, "regions"), {});
            break;
        case DatasetKind::deepcrack_db: {
            m.color = ColorMode::rgb;
            m.tolerance = 0;
            if (fs::is_directory(root / "train_img")) {
                add_split(m, require_dir(root, "train_img"), require_dir(root, "train_lab"), Split::train,
                          std::nullopt, {});
                add_split(m, require_dir(root, "test_img"), require_dir(root, "test_lab"), Split::test,
                          std::nullopt, {});
            } else {
                const fs::path split_file = root / "split.txt";
                std::ifstream is(split_file);
                if (!is) {
                    throw IngestionError("DeepCrack-DB root needs train_img/... subdirectories or " +
                                         split_file.string());
                }
                std::map<std::string, Split> splits;
                std::string line;
                while (std::getline(is, line)) {
                    if (!line.empty() && line.back() == '\r') line.pop_back();
                    if (line.empty() || line[0] == '#') continue;
                    const auto f = split_tabs(line);
                    if (f.size() != 2 || (f[1] != "train" && f[1] != "test")) {
                        throw IngestionError("bad line in " + split_file.string() + ": " + line);
                    }
                    splits[f[0]] = f[1] == "train" ? Split::train : Split::test;
                }
                const fs::path images = require_dir(root, "images");
                const fs::path masks = require_dir(root, "masks");
                for (Split s : {Split::train, Split::test}) {
                    add_split(m, images, masks, s, std::nullopt, [&](const fs::path& p) {
                        const auto it = splits.find(p.stem().string());
                        if (it == splits.end()) {
                            throw IngestionError("image not listed in split.txt: " + p.string());
                        }
                        return it->second == s;
                    });
                }
            }
            break;
        }
    }
    if (m.entries.empty()) throw IngestionError("no images found under " + root.string());
    m.validate();
    return m;
}

LoadedPair load_pair(const ManifestEntry& entry, ColorMode color) {
    LoadedPair p;
    p.image = read_image(entry.image, color);
    p.mask = read_mask(entry.mask);
    auto check = [&](const BinaryMask& m, const fs::path& path) {
        if (m.height != p.image.height || m.width != p.image.width) {
            throw ShapeError("dimension mismatch: " + entry.image.string() + " is " +
                             std::to_string(p.image.width) + "x" + std::to_string(p.image.height) + " but " +
                             path.string() + " is " + std::to_string(m.width) + "x" + std::to_string(m.height));
        }
    };
    check(p.mask, entry.mask);
    if (entry.region) {
        p.region = read_mask(*entry.region);
        check(*p.region, *entry.region);
    }
    return p;
}

}  // namespace crackseg
