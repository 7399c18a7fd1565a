#include "shapeshot/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "shapeshot/errors.hpp"

namespace shapeshot {

namespace {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

constexpr char kCheckpointMagic[4] = {'P', 'N', 'C', 'K'};
constexpr char kDatasetMagic[4] = {'F', 'S', 'D', 'S'};

class Writer {
public:
    template <typename T>
    void put(T value) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    void put_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes_.insert(bytes_.end(), p, p + n);
    }
    void put_doubles(const std::vector<double>& values) { put_bytes(values.data(), values.size() * sizeof(double)); }

    std::vector<std::uint8_t> finish() {
        put(crc32_of(bytes_, bytes_.size()));
        return std::move(bytes_);
    }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    Reader(const std::vector<std::uint8_t>& bytes, const char* magic, const char* what) : what_(what) {
        if (bytes.size() < 8 || std::memcmp(bytes.data(), magic, 4) != 0) {
            throw FormatError(std::string(what) + ": bad magic");
        }
        std::uint32_t stored = 0;
        std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
        if (stored != crc32_of(bytes, bytes.size() - 4)) throw FormatError(std::string(what) + ": CRC mismatch");
        data_ = bytes.data();
        end_ = bytes.size() - 4;
        pos_ = 4;
    }

    template <typename T>
    T get() {
        T value;
        std::memcpy(&value, take(sizeof(T)), sizeof(T));
        return value;
    }
    std::vector<double> get_doubles(std::size_t n) {
        if (n > (end_ - pos_) / sizeof(double)) truncated();
        std::vector<double> values(n);
        std::memcpy(values.data(), take(n * sizeof(double)), n * sizeof(double));
        return values;
    }
    std::string get_string(std::size_t n) {
        const auto* p = take(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }
    void expect_end() const {
        if (pos_ != end_) throw FormatError(std::string(what_) + ": trailing bytes");
    }

private:
    const std::uint8_t* take(std::size_t n) {
        if (n > end_ - pos_) truncated();
        const auto* p = data_ + pos_;
        pos_ += n;
        return p;
    }
    [[noreturn]] void truncated() const { throw FormatError(std::string(what_) + ": truncated"); }

    const char* what_;
    const std::uint8_t* data_ = nullptr;
    std::size_t end_ = 0;
    std::size_t pos_ = 0;
};

void put_image(Writer& w, const Image& img) {
    if (img.height > 0xffff || img.width > 0xffff || img.channels > 0xffff) {
        throw FormatError("image dimensions exceed the 16-bit limit of the dataset format");
    }
    w.put(static_cast<std::uint16_t>(img.height));
    w.put(static_cast<std::uint16_t>(img.width));
    w.put(static_cast<std::uint16_t>(img.channels));
    w.put_doubles(img.pixels);
}

Image get_image(Reader& r) {
    const auto h = r.get<std::uint16_t>();
    const auto w = r.get<std::uint16_t>();
    const auto c = r.get<std::uint16_t>();
    if (h == 0 || w == 0 || c == 0) throw FormatError("dataset: zero image dimension");
    Image img(h, w, c);
    img.pixels = r.get_doubles(std::size_t{h} * w * c);
    for (double v : img.pixels) {
        if (!(v >= 0.0 && v <= 1.0)) throw FormatError("dataset: pixel outside [0, 1]");
    }
    return img;
}

}  // namespace

std::string version_string() { return "shapeshot 0.1.0"; }

std::uint32_t crc32_of(const std::vector<std::uint8_t>& bytes, std::size_t length) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t pos = 0;
    while (pos < length) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(length - pos, 1u << 30));
        crc = crc32(crc, bytes.data() + pos, chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedParameter>& tensors) {
    Writer w;
    w.put_bytes(kCheckpointMagic, 4);
    w.put(kCheckpointVersion);
    w.put(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        if (t.name.size() > 0xffff) throw FormatError("tensor name too long: " + t.name.substr(0, 32) + "...");
        if (t.tensor.rank() > 0xff) throw FormatError("tensor rank too large: " + t.name);
        w.put(static_cast<std::uint16_t>(t.name.size()));
        w.put_bytes(t.name.data(), t.name.size());
        w.put(static_cast<std::uint8_t>(t.tensor.rank()));
        for (auto d : t.tensor.shape()) {
            if (d > 0xffffffffu) throw FormatError("tensor dimension exceeds 32 bits: " + t.name);
            w.put(static_cast<std::uint32_t>(d));
        }
        w.put_bytes(t.tensor.values().data(), t.tensor.numel() * sizeof(double));
    }
    return w.finish();
}

std::vector<NamedParameter> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes, kCheckpointMagic, "checkpoint");
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const auto count = r.get<std::uint32_t>();
    std::vector<NamedParameter> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = r.get<std::uint16_t>();
        std::string name = r.get_string(name_len);
        const auto rank = r.get<std::uint8_t>();
        Shape shape;
        std::size_t n = 1;
        for (std::uint8_t k = 0; k < rank; ++k) {
            shape.push_back(r.get<std::uint32_t>());
            if (shape.back() == 0) throw FormatError("checkpoint: zero dimension in " + name);
            n *= shape.back();
        }
        auto values = r.get_doubles(n);
        Tensor tensor;
        try {
            tensor = Tensor::from(std::move(shape), std::move(values));
        } catch (const NumericError&) {
            throw FormatError("checkpoint: non-finite values in " + name);
        }
        out.push_back({std::move(name), std::move(tensor)});
    }
    r.expect_end();
    return out;
}

std::vector<std::uint8_t> encode_dataset(const ClassDataset& dataset) {
    Writer w;
    w.put_bytes(kDatasetMagic, 4);
    w.put(kDatasetVersion);
    w.put(static_cast<std::uint8_t>(dataset.split));
    w.put(static_cast<std::uint32_t>(dataset.classes.size()));
    for (const auto& cls : dataset.classes) {
        w.put(cls.class_id);
        w.put(static_cast<std::uint32_t>(cls.images.size()));
        for (const auto& img : cls.images) put_image(w, img);
        const bool has_masks = !cls.masks.empty();
        if (has_masks && cls.masks.size() != cls.images.size()) {
            throw ContractError("class " + std::to_string(cls.class_id) + " has masks for only some images");
        }
        w.put(static_cast<std::uint8_t>(has_masks));
        if (has_masks) {
            for (std::size_t i = 0; i < cls.masks.size(); ++i) {
                const auto& m = cls.masks[i];
                if (m.height != cls.images[i].height || m.width != cls.images[i].width) {
                    throw ContractError("mask size differs from its image in class " + std::to_string(cls.class_id));
                }
                w.put_bytes(m.bits.data(), m.bits.size());
            }
        }
        std::uint32_t blocks = 0;
        for (const auto& v : cls.stylized) blocks += !v.empty();
        w.put(blocks);
        for (std::size_t i = 0; i < cls.stylized.size(); ++i) {
            if (cls.stylized[i].empty()) continue;
            w.put(static_cast<std::uint32_t>(i));
            w.put(static_cast<std::uint32_t>(cls.stylized[i].size()));
            for (const auto& img : cls.stylized[i]) put_image(w, img);
        }
    }
    return w.finish();
}

ClassDataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes, kDatasetMagic, "dataset");
    const auto version = r.get<std::uint32_t>();
    if (version != kDatasetVersion) throw FormatError("dataset: unsupported version " + std::to_string(version));
    ClassDataset ds;
    const auto split = r.get<std::uint8_t>();
    if (split > static_cast<std::uint8_t>(Split::test)) throw FormatError("dataset: unknown split tag");
    ds.split = static_cast<Split>(split);
    const auto n_classes = r.get<std::uint32_t>();
    for (std::uint32_t k = 0; k < n_classes; ++k) {
        ClassData cls;
        cls.class_id = r.get<std::uint32_t>();
        const auto n_images = r.get<std::uint32_t>();
        for (std::uint32_t i = 0; i < n_images; ++i) cls.images.push_back(get_image(r));
        if (r.get<std::uint8_t>() != 0) {
            for (const auto& img : cls.images) {
                Mask m{img.height, img.width, {}};
                const auto raw = r.get_string(img.height * img.width);
                m.bits.assign(raw.begin(), raw.end());
                for (auto b : m.bits)
                    if (b > 1) throw FormatError("dataset: mask bit outside {0, 1}");
                cls.masks.push_back(std::move(m));
            }
        }
        const auto blocks = r.get<std::uint32_t>();
        if (blocks > 0) cls.stylized.assign(cls.images.size(), {});
        for (std::uint32_t b = 0; b < blocks; ++b) {
            const auto index = r.get<std::uint32_t>();
            if (index >= cls.images.size() || !cls.stylized[index].empty()) {
                throw FormatError("dataset: bad stylized block index " + std::to_string(index));
            }
            const auto n_variants = r.get<std::uint32_t>();
            for (std::uint32_t v = 0; v < n_variants; ++v) cls.stylized[index].push_back(get_image(r));
        }
        ds.classes.push_back(std::move(cls));
    }
    r.expect_end();
    return ds;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return {bytes.begin(), bytes.end()};
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedParameter>& tensors) {
    write_file(path, encode_checkpoint(tensors));
}

std::vector<NamedParameter> load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

void save_dataset(const std::filesystem::path& path, const ClassDataset& dataset) {
    write_file(path, encode_dataset(dataset));
}

ClassDataset load_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

}  // namespace shapeshot
