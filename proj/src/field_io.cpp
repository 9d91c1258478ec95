#include "mstab/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace mstab {

static_assert(std::endian::native == std::endian::little, "CGOF I/O assumes a little-endian host");

namespace {

template <class T>
void put(std::ofstream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is, const std::string& path)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error("CGOF: truncated header in " + path);
    return v;
}

void check_magic(std::ifstream& is, const std::string& path, const char* magic)
{
    char m[4];
    is.read(m, 4);
    if (!is || std::memcmp(m, magic, 4) != 0) throw Error(std::string("bad magic in ") + path);
    auto version = get<std::uint32_t>(is, path);
    if (version != kCgofVersion)
        throw Error("unsupported CGOF version " + std::to_string(version) + " in " + path);
}

} // namespace

void save_field(const std::string& path, const Field& u)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    os.write("CGOF", 4);
    put<std::uint32_t>(os, kCgofVersion);
    put<std::uint8_t>(os, std::uint8_t(u.degree()));
    put<std::uint32_t>(os, std::uint32_t(u.grid()->n()));
    put<double>(os, u.grid()->half_width());
    for (int c = 0; c < u.ncomp(); ++c)
        os.write(reinterpret_cast<const char*>(u.comp(c).data()),
                 std::streamsize(u.comp(c).size() * sizeof(cplx)));
    if (!os) throw Error("write failed for " + path);
}

Field load_field(const std::string& path, const GridPtr& grid)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    check_magic(is, path, "CGOF");
    auto kind = get<std::uint8_t>(is, path);
    auto N = get<std::uint32_t>(is, path);
    auto L = get<double>(is, path);
    if (kind > 2) throw Error("CGOF: invalid kind " + std::to_string(kind) + " in " + path);
    GridPtr g = grid;
    if (!g || g->n() != int(N) || g->half_width() != L) g = make_grid(L, int(N));
    Field u(g, kind);
    for (int c = 0; c < u.ncomp(); ++c) {
        is.read(reinterpret_cast<char*>(u.comp(c).data()),
                std::streamsize(u.comp(c).size() * sizeof(cplx)));
        if (!is) throw Error("CGOF: truncated data in " + path);
    }
    return u;
}

void save_matrix(const std::string& path, int rows, int cols, const std::vector<cplx>& data)
{
    if (data.size() != std::size_t(rows) * cols) throw Error("save_matrix: size mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    os.write("CGOM", 4);
    put<std::uint32_t>(os, kCgofVersion);
    put<std::uint32_t>(os, std::uint32_t(rows));
    put<std::uint32_t>(os, std::uint32_t(cols));
    os.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size() * sizeof(cplx)));
    if (!os) throw Error("write failed for " + path);
}

std::vector<cplx> load_matrix(const std::string& path, int& rows, int& cols)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    check_magic(is, path, "CGOM");
    rows = int(get<std::uint32_t>(is, path));
    cols = int(get<std::uint32_t>(is, path));
    std::vector<cplx> data(std::size_t(rows) * cols);
    is.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size() * sizeof(cplx)));
    if (!is) throw Error("matrix blob truncated: " + path);
    return data;
}

} // namespace mstab
