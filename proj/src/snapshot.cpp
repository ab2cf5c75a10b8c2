#include "fkpde/snapshot.hpp"

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fkpde {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'P', 'S', 'I', 'F'};
constexpr std::uint16_t kVersion = 1;

class Writer {
public:
    template <class T>
    void put(T v) {
        const auto* p = reinterpret_cast<const unsigned char*>(&v);
        buf.insert(buf.end(), p, p + sizeof(T));
    }
    void put_doubles(const std::vector<double>& v) {
        const auto* p = reinterpret_cast<const unsigned char*>(v.data());
        buf.insert(buf.end(), p, p + v.size() * sizeof(double));
    }
    std::vector<unsigned char> buf;
};

class Reader {
public:
    Reader(const unsigned char* p, std::size_t n) : p_(p), n_(n) {}
    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, p_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::vector<double> doubles(std::uint64_t count) {
        if (count > (n_ - pos_) / sizeof(double)) throw SnapshotError("truncated snapshot");
        std::vector<double> v(count);
        std::memcpy(v.data(), p_ + pos_, count * sizeof(double));
        pos_ += count * sizeof(double);
        return v;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t k) const {
        if (n_ - pos_ < k) throw SnapshotError("truncated snapshot");
    }
    const unsigned char* p_;
    std::size_t n_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(const unsigned char* p, std::size_t n) {
    uLong c = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks for very large fields
    while (n > 0) {
        const uInt k = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        c = crc32(c, p, k);
        p += k;
        n -= k;
    }
    return static_cast<std::uint32_t>(c);
}

}  // namespace

std::vector<unsigned char> encode_snapshot(const PsiField& f) {
    const int d = f.dim();
    if (f.values.size() != f.slices() * f.nodes() * f.m) throw SnapshotError("field value count does not match shape");
    Writer w;
    w.buf.insert(w.buf.end(), kMagic, kMagic + 4);
    w.put<std::uint16_t>(kVersion);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(d));
    w.put<std::uint16_t>(static_cast<std::uint16_t>(f.m));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(f.slices()));
    for (int a = 0; a < d; ++a) w.put<std::uint32_t>(static_cast<std::uint32_t>(f.lattice.per_axis[a]));
    w.put_doubles(f.times);
    w.put_doubles(f.lattice.coordinates());
    w.put_doubles(f.values);
    w.put<std::uint64_t>(f.gradients.size());
    w.put_doubles(f.gradients);
    w.put<std::uint64_t>(f.stderr_values.size());
    w.put_doubles(f.stderr_values);
    w.put<std::uint32_t>(crc_of(w.buf.data() + 4, w.buf.size() - 4));
    return std::move(w.buf);
}

PsiField decode_snapshot(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw SnapshotError("bad magic: not a PSIF file");
    Reader r(bytes.data() + 4, bytes.size() - 4);
    const auto version = r.get<std::uint16_t>();
    if (version != kVersion) throw SnapshotError("unsupported version " + std::to_string(version));
    const int d = r.get<std::uint16_t>();
    const int m = r.get<std::uint16_t>();
    const std::uint32_t slices = r.get<std::uint32_t>();
    if (d < 1 || d > 3 || m < 1) throw SnapshotError("bad dimensions in snapshot header");
    Lattice lat;
    lat.dim = d;
    lat.per_axis = {1, 1, 1};
    for (int a = 0; a < d; ++a) {
        lat.per_axis[a] = static_cast<int>(r.get<std::uint32_t>());
        if (lat.per_axis[a] < 1) throw SnapshotError("bad node count in snapshot header");
    }
    PsiField f;
    f.lattice = lat;
    f.m = m;
    f.times = r.doubles(slices);
    const std::vector<double> coords = r.doubles(static_cast<std::uint64_t>(lat.size()) * d);
    f.values = r.doubles(static_cast<std::uint64_t>(slices) * lat.size() * m);
    f.gradients = r.doubles(r.get<std::uint64_t>());
    f.stderr_values = r.doubles(r.get<std::uint64_t>());
    const std::size_t payload_end = 4 + r.pos();
    const auto stored = r.get<std::uint32_t>();
    if (4 + r.pos() != bytes.size()) throw SnapshotError("trailing bytes after snapshot");
    if (stored != crc_of(bytes.data() + 4, payload_end - 4)) throw SnapshotError("CRC mismatch: snapshot is corrupted");
    if (coords != lat.coordinates()) throw SnapshotError("node coordinates do not match the lattice");
    if (!f.gradients.empty() && f.gradients.size() != f.values.size() * d)
        throw SnapshotError("gradient block has the wrong length");
    if (!f.stderr_values.empty() && f.stderr_values.size() != f.values.size())
        throw SnapshotError("stderr block has the wrong length");
    return f;
}

void write_snapshot(const PsiField& f, const std::string& path) {
    const auto bytes = encode_snapshot(f);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SnapshotError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw SnapshotError("write failed: " + path);
}

PsiField read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SnapshotError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_snapshot(bytes);
}

PsiField field_from_series(const GridSeries& u) {
    PsiField f;
    f.times = u.times;
    f.lattice = u.lattice;
    f.m = u.m;
    f.values = u.values;
    return f;
}

}  // namespace fkpde
