#include <filesystem>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "shapeshot/errors.hpp"
#include "shapeshot/harness.hpp"
#include "shapeshot/io.hpp"

using namespace shapeshot;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("shapeshot_io_" + name);
    fs::remove_all(dir);
    return dir;
}

ClassDataset small_generated() {
    GeneratorConfig cfg;
    cfg.pretrain_classes = 3;
    cfg.validation_classes = 2;
    cfg.test_classes = 2;
    cfg.images_per_class = 3;
    cfg.resolution = 16;
    cfg.content_bank_size = 8;
    cfg.seed = 4;
    return build_stylized_variants(generate_dataset(cfg).pretrain, 2, 0.4, 1);
}

}  // namespace

TEST(Crc, KnownVector) {
    const std::string s = "123456789";
    EXPECT_EQ(crc32_of(std::vector<std::uint8_t>(s.begin(), s.end()), s.size()), 0xCBF43926u);
}

TEST(CheckpointFile, RoundTripIsExact) {
    const Checkpoint ckpt{ConvBackbone({.filters = 3, .in_channels = 3, .resolution = 16}, 7), {1, 5, 9}};
    const auto bytes = encode_checkpoint(ckpt.to_tensors());
    const auto back = decode_checkpoint(bytes);
    const auto orig = ckpt.to_tensors();
    ASSERT_EQ(back.size(), orig.size());
    for (std::size_t i = 0; i < orig.size(); ++i) {
        EXPECT_EQ(back[i].name, orig[i].name);
        EXPECT_EQ(back[i].tensor.shape(), orig[i].tensor.shape());
        const auto a = orig[i].tensor.values(), b = back[i].tensor.values();
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
    EXPECT_EQ(encode_checkpoint(back), bytes);
}

TEST(CheckpointFile, EveryFlippedByteIsDetected) {
    const Checkpoint ckpt{ConvBackbone({.filters = 2, .in_channels = 3, .resolution = 16}, 7), {1}};
    const auto bytes = encode_checkpoint(ckpt.to_tensors());
    for (std::size_t i = 0; i < bytes.size(); i += 7) {
        auto bad = bytes;
        bad[i] ^= 0x5A;
        EXPECT_THROW(decode_checkpoint(bad), FormatError) << "byte " << i;
    }
}

TEST(CheckpointFile, TruncationAndTrailingBytes) {
    const Checkpoint ckpt{ConvBackbone({.filters = 2, .in_channels = 3, .resolution = 16}, 7), {1}};
    const auto bytes = encode_checkpoint(ckpt.to_tensors());
    for (std::size_t len : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() - 1}) {
        EXPECT_THROW(decode_checkpoint({bytes.begin(), bytes.begin() + static_cast<long>(len)}), FormatError);
    }
    auto longer = bytes;
    longer.push_back(0);
    EXPECT_THROW(decode_checkpoint(longer), FormatError);
}

TEST(CheckpointFile, WrongMagic) {
    auto bytes = encode_dataset(small_generated());
    EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(DatasetFile, RoundTripKeepsEverything) {
    const auto ds = small_generated();
    const auto back = decode_dataset(encode_dataset(ds));
    EXPECT_EQ(back, ds);
    EXPECT_TRUE(back.has_stylized_variants());
    EXPECT_EQ(back.classes[0].masks.size(), 3u);
}

TEST(DatasetFile, WithoutMasksOrVariants) {
    auto ds = shapeshot::testing::random_dataset(2, 3, 4, 1);
    EXPECT_EQ(decode_dataset(encode_dataset(ds)), ds);
}

TEST(DatasetFile, CorruptionIsDetected) {
    const auto bytes = encode_dataset(small_generated());
    auto bad = bytes;
    bad[bad.size() / 2] ^= 1;
    EXPECT_THROW(decode_dataset(bad), FormatError);
    EXPECT_THROW(decode_dataset({bytes.begin(), bytes.end() - 1}), FormatError);
}

TEST(Files, SaveAndLoad) {
    const auto dir = scratch_dir("files");
    const auto ds = small_generated();
    save_dataset(dir / "nested" / "d.fsds", ds);
    EXPECT_EQ(load_dataset(dir / "nested" / "d.fsds"), ds);

    const Checkpoint ckpt{ConvBackbone({.filters = 2, .in_channels = 3, .resolution = 16}, 3), {0}};
    save_checkpoint(dir / "c.pnck", ckpt.to_tensors());
    EXPECT_EQ(encode_checkpoint(load_checkpoint(dir / "c.pnck")), encode_checkpoint(ckpt.to_tensors()));

    write_text(dir / "t.txt", "hello\n");
    EXPECT_EQ(read_text(dir / "t.txt"), "hello\n");
    fs::remove_all(dir);
}

TEST(Files, MissingAndUnwritablePaths) {
    const auto dir = scratch_dir("missing");
    EXPECT_THROW(read_file(dir / "nope.pnck"), IoError);
    EXPECT_THROW(load_dataset(dir / "nope.fsds"), IoError);
    fs::create_directories(dir);
    write_text(dir / "file", "x");
    EXPECT_THROW(write_text(dir / "file" / "child.txt", "y"), IoError);
    fs::remove_all(dir);
}

TEST(Files, VersionString) { EXPECT_EQ(version_string().rfind("shapeshot ", 0), 0u); }
