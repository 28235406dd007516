#include "mel/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "field files are little endian; big-endian hosts are unsupported");

namespace mel {

namespace {
constexpr char kMagic[4] = {'M', 'G', 'H', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
}  // namespace

void write_field(const std::string& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_field: cannot open " + path);
  os.write(kMagic, 4);
  put_u32(os, std::uint32_t(f.rank()));
  if (const CellGrid* cg = f.cell_grid()) {
    put_u32(os, 0);
    for (int d = 0; d < 3; ++d) put_u32(os, std::uint32_t(cg->n));
  } else {
    const BoxGrid& bg = *f.box_grid();
    put_u32(os, 1);
    for (int d = 0; d < 3; ++d) put_u32(os, std::uint32_t(bg.n[d]));
    for (int d = 0; d < 3; ++d) put_f64(os, bg.origin[d]);
    for (int d = 0; d < 3; ++d) put_f64(os, bg.side[d]);
  }
  os.write(reinterpret_cast<const char*>(f.raw().data()),
           std::streamsize(f.raw().size() * sizeof(double)));
  if (!os) throw std::runtime_error("write_field: short write to " + path);
}

Field read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_field: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("read_field: bad magic in " + path);
  const std::uint32_t rank_code = get_u32(is);
  if (rank_code > 2) throw std::runtime_error("read_field: bad rank code");
  const std::uint32_t kind = get_u32(is);
  std::uint32_t dims[3];
  for (auto& d : dims) d = get_u32(is);

  GridVariant grid = [&]() -> GridVariant {
    if (kind == 0) {
      if (dims[0] != dims[1] || dims[1] != dims[2])
        throw std::runtime_error("read_field: cell grids are cubic");
      return CellGrid(int(dims[0]));
    }
    if (kind != 1) throw std::runtime_error("read_field: bad grid kind");
    Vec3 origin, side;
    for (int d = 0; d < 3; ++d) origin[d] = get_f64(is);
    for (int d = 0; d < 3; ++d) side[d] = get_f64(is);
    return BoxGrid(origin, side, {int(dims[0]), int(dims[1]), int(dims[2])});
  }();

  Field f(grid, Rank(rank_code));
  is.read(reinterpret_cast<char*>(f.raw().data()),
          std::streamsize(f.raw().size() * sizeof(double)));
  if (!is) throw std::runtime_error("read_field: truncated samples in " + path);
  return f;
}

}  // namespace mel
