#include "crackseg/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "crackseg/resample.hpp"

namespace crackseg {

namespace fs = std::filesystem;

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

ImageTensor to_grayscale(const ImageTensor& rgb) {
    if (rgb.channels == 1) return rgb;
    ImageTensor out(rgb.height, rgb.width, 1);
    const std::size_t n = rgb.plane();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = 0.299 * rgb.data[i] + 0.587 * rgb.data[n + i] + 0.114 * rgb.data[2 * n + i];
        out.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

ImageTensor resize_bilinear(const ImageTensor& img, int height, int width) {
    ImageTensor out(height, width, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        resize_plane_bilinear(img.data.data() + c * img.plane(), img.height, img.width,
                              out.data.data() + c * out.plane(), height, width);
    }
    return out;
}

ProbabilityMap resize_bilinear(const ProbabilityMap& map, int height, int width) {
    ProbabilityMap out(height, width);
    resize_plane_bilinear(map.data.data(), map.height, map.width, out.data.data(), height, width);
    return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int height, int width) {
    BinaryMask out(height, width);
    resize_plane_nearest(mask.data.data(), mask.height, mask.width, out.data.data(), height, width);
    return out;
}

namespace {

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

template <typename Raster>
void check_crop(const Raster& r, int y, int x, int h, int w) {
    if (y < 0 || x < 0 || h < 1 || w < 1 || y + h > r.height || x + w > r.width) {
        throw ShapeError("crop window " + std::to_string(w) + "x" + std::to_string(h) + "+" +
                         std::to_string(x) + "+" + std::to_string(y) + " outside " +
                         std::to_string(r.width) + "x" + std::to_string(r.height));
    }
}

}  // namespace

ImageTensor pad_reflect(const ImageTensor& img, int top, int bottom, int left, int right) {
    ImageTensor out(img.height + top + bottom, img.width + left + right, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < out.height; ++y) {
            const int sy = reflect_index(y - top, img.height);
            for (int x = 0; x < out.width; ++x) {
                out.at(c, y, x) = img.at(c, sy, reflect_index(x - left, img.width));
            }
        }
    }
    return out;
}

BinaryMask pad_reflect(const BinaryMask& mask, int top, int bottom, int left, int right) {
    BinaryMask out(mask.height + top + bottom, mask.width + left + right);
    for (int y = 0; y < out.height; ++y) {
        const int sy = reflect_index(y - top, mask.height);
        for (int x = 0; x < out.width; ++x) out.at(y, x) = mask.at(sy, reflect_index(x - left, mask.width));
    }
    return out;
}

ImageTensor crop(const ImageTensor& img, int y, int x, int height, int width) {
    check_crop(img, y, x, height, width);
    ImageTensor out(height, width, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        for (int r = 0; r < height; ++r) {
            const float* src = &img.data[c * img.plane() + static_cast<std::size_t>(y + r) * img.width + x];
            std::copy(src, src + width, &out.data[c * out.plane() + static_cast<std::size_t>(r) * width]);
        }
    }
    return out;
}

ProbabilityMap crop(const ProbabilityMap& map, int y, int x, int height, int width) {
    check_crop(map, y, x, height, width);
    ProbabilityMap out(height, width);
    for (int r = 0; r < height; ++r) {
        const float* src = &map.data[static_cast<std::size_t>(y + r) * map.width + x];
        std::copy(src, src + width, &out.data[static_cast<std::size_t>(r) * width]);
    }
    return out;
}

BinaryMask crop(const BinaryMask& mask, int y, int x, int height, int width) {
    check_crop(mask, y, x, height, width);
    BinaryMask out(height, width);
    for (int r = 0; r < height; ++r) {
        const auto* src = &mask.data[static_cast<std::size_t>(y + r) * mask.width + x];
        std::copy(src, src + width, &out.data[static_cast<std::size_t>(r) * width]);
    }
    return out;
}

// --- File I/O ------------------------------------------------------------------

namespace {

cv::Mat decode(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw IngestionError("missing file: " + path.string());
    cv::Mat m;
    try {
        m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    } catch (const cv::Exception& e) {
        throw IngestionError("cannot decode image " + path.string() + ": " + e.what());
    }
    if (m.empty()) throw IngestionError("cannot decode image: " + path.string());
    if (m.depth() != CV_8U && m.depth() != CV_16U) {
        throw IngestionError("unsupported bit depth in " + path.string());
    }
    return m;
}

double full_scale(const cv::Mat& m) { return m.depth() == CV_8U ? 255.0 : 65535.0; }

double sample(const cv::Mat& m, int y, int x, int ch) {
    const int cn = m.channels();
    if (m.depth() == CV_8U) return m.ptr<std::uint8_t>(y)[x * cn + ch];
    return m.ptr<std::uint16_t>(y)[x * cn + ch];
}

// OpenCV stores colour as BGR(A); returns planar RGB or single-channel.
ImageTensor mat_to_tensor(const cv::Mat& m) {
    const double scale = 1.0 / full_scale(m);
    const int cn = m.channels();
    const int out_c = cn >= 3 ? 3 : 1;
    ImageTensor img(m.rows, m.cols, out_c);
    for (int y = 0; y < m.rows; ++y) {
        for (int x = 0; x < m.cols; ++x) {
            if (out_c == 1) {
                img.at(0, y, x) = static_cast<float>(sample(m, y, x, 0) * scale);
            } else {
                img.at(0, y, x) = static_cast<float>(sample(m, y, x, 2) * scale);
                img.at(1, y, x) = static_cast<float>(sample(m, y, x, 1) * scale);
                img.at(2, y, x) = static_cast<float>(sample(m, y, x, 0) * scale);
            }
        }
    }
    return img;
}

void encode(const fs::path& path, const cv::Mat& m) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), m);
    } catch (const cv::Exception& e) {
        throw Error("cannot write " + path.string() + ": " + e.what());
    }
    if (!ok) throw Error("cannot write " + path.string());
}

}  // namespace

bool has_image_signature(const fs::path& path) {
    if (!fs::is_regular_file(path) || fs::file_size(path) == 0) return false;
    try {
        return cv::haveImageReader(path.string());
    } catch (const cv::Exception&) {
        return false;
    }
}

ImageTensor read_image(const fs::path& path, ColorMode mode) {
    ImageTensor img = mat_to_tensor(decode(path));
    if (mode == ColorMode::grayscale) return to_grayscale(img);
    if (img.channels == 1) {
        ImageTensor rgb(img.height, img.width, 3);
        for (int c = 0; c < 3; ++c) std::copy(img.data.begin(), img.data.end(), rgb.data.begin() + c * img.plane());
        return rgb;
    }
    return img;
}

BinaryMask read_mask(const fs::path& path) {
    const cv::Mat m = decode(path);
    const double half = full_scale(m) / 2.0;
    BinaryMask mask(m.rows, m.cols);
    const int cn = std::min(m.channels(), 3);
    for (int y = 0; y < m.rows; ++y) {
        for (int x = 0; x < m.cols; ++x) {
            double v = 0;
            for (int c = 0; c < cn; ++c) v = std::max(v, sample(m, y, x, c));
            mask.at(y, x) = v >= half ? 1 : 0;
        }
    }
    return mask;
}

ProbabilityMap read_probability(const fs::path& path) {
    if (path.extension() == ".f32") return read_probability_raw(path);
    const cv::Mat m = decode(path);
    const double scale = 1.0 / full_scale(m);
    ProbabilityMap map(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
        for (int x = 0; x < m.cols; ++x) map.at(y, x) = static_cast<float>(sample(m, y, x, 0) * scale);
    }
    return map;
}

void write_image_png(const fs::path& path, const ImageTensor& img, int bit_depth) {
    const int depth = bit_depth == 16 ? CV_16U : CV_8U;
    const double scale = bit_depth == 16 ? 65535.0 : 255.0;
    const int cn = img.channels == 3 ? 3 : 1;
    cv::Mat m(img.height, img.width, CV_MAKETYPE(depth, cn));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < cn; ++c) {
                // BGR order on disk
                const int src_c = cn == 3 ? 2 - c : 0;
                const double v = std::round(std::clamp(img.at(src_c, y, x), 0.0f, 1.0f) * scale);
                if (depth == CV_8U) {
                    m.ptr<std::uint8_t>(y)[x * cn + c] = static_cast<std::uint8_t>(v);
                } else {
                    m.ptr<std::uint16_t>(y)[x * cn + c] = static_cast<std::uint16_t>(v);
                }
            }
        }
    }
    encode(path, m);
}

void write_mask_png(const fs::path& path, const BinaryMask& mask) {
    cv::Mat m(mask.height, mask.width, CV_8UC1);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) m.at<std::uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
    }
    encode(path, m);
}

void write_probability_png(const fs::path& path, const ProbabilityMap& map) {
    cv::Mat m(map.height, map.width, CV_16UC1);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const double p = std::clamp(static_cast<double>(map.at(y, x)), 0.0, 1.0);
            m.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(std::lround(p * 65535.0));
        }
    }
    encode(path, m);
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4] = {};
    is.read(reinterpret_cast<char*>(b), 4);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_probability_raw(const fs::path& path, const ProbabilityMap& map) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    os.write("CSF1", 4);
    put_u32(os, static_cast<std::uint32_t>(map.height));
    put_u32(os, static_cast<std::uint32_t>(map.width));
    for (float v : map.data) {
        std::uint32_t bits = 0;
        std::memcpy(&bits, &v, 4);
        put_u32(os, bits);
    }
}

ProbabilityMap read_probability_raw(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IngestionError("missing file: " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (std::memcmp(magic, "CSF1", 4) != 0) throw IngestionError("not a raw probability file: " + path.string());
    const int h = static_cast<int>(get_u32(is));
    const int w = static_cast<int>(get_u32(is));
    ProbabilityMap map(h, w);
    for (float& v : map.data) {
        const std::uint32_t bits = get_u32(is);
        std::memcpy(&v, &bits, 4);
    }
    if (!is) throw IngestionError("truncated raw probability file: " + path.string());
    return map;
}

}  // namespace crackseg
