// Regenerates tests/fixtures/golden from the current implementation. Run only when the
// augmentation policy changes on purpose.
#include <fstream>
#include <iostream>

#include "support.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_golden_fixtures <fixtures/golden dir>\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);
    std::ofstream index(dir / "golden.tsv");
    index << "# seed\timage_fnv1a\tmask_fnv1a\n";
    for (const auto seed : testing::kGoldenSeeds) {
        const auto p = testing::golden_patch(seed);
        crackseg::write_image_png(dir / ("patch-" + std::to_string(seed) + "-image.png"), p.image, 16);
        crackseg::write_mask_png(dir / ("patch-" + std::to_string(seed) + "-mask.png"), p.mask);
        index << testing::golden_manifest_line(seed, p) << '\n';
    }
    std::cout << "wrote " << testing::kGoldenSeeds.size() << " golden patches to " << dir << '\n';
    return 0;
}
