#include "tfns/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace tfns {

static_assert(std::endian::native == std::endian::little,
              "field dumps are specified little-endian; add byte swapping for this platform");

namespace {
constexpr char kMagic[8] = {'T', 'F', 'N', 'S', 'F', 'L', 'D', '1'};
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_field_csv(const Field& f, const std::string& path, const std::string& header) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw Error("cannot open for writing: " + path);
  if (!header.empty()) {
    std::string line;
    for (std::size_t pos = 0; pos <= header.size();) {
      const std::size_t nl = header.find('\n', pos);
      line = header.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
      std::fprintf(fp, "# %s\n", line.c_str());
      if (nl == std::string::npos) break;
      pos = nl + 1;
    }
  }
  std::fprintf(fp, "s,x,y,value\n");
  for (int i = 0; i < f.grid.n_s; ++i) {
    const std::string s = format_double(f.grid.s(i));
    const std::string x = format_double(f.grid.x(i));
    for (int j = 0; j < f.grid.n_y; ++j) {
      std::fprintf(fp, "%s,%s,%s,%s\n", s.c_str(), x.c_str(), format_double(f.grid.y(j)).c_str(),
                   format_double(f.at(i, j)).c_str());
    }
  }
  std::fclose(fp);
}

void write_field_binary(const Field& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out.write(kMagic, 8);
  const std::int64_t ns = f.grid.n_s, ny = f.grid.n_y;
  out.write(reinterpret_cast<const char*>(&ns), 8);
  out.write(reinterpret_cast<const char*>(&ny), 8);
  const double header[4] = {f.grid.s_min, f.grid.s_max, f.grid.y_period, f.time};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!out) throw Error("short write: " + path);
}

Field read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw Error("bad field dump magic: " + path);
  std::int64_t ns = 0, ny = 0;
  in.read(reinterpret_cast<char*>(&ns), 8);
  in.read(reinterpret_cast<char*>(&ny), 8);
  double header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || ns < 2 || ny < 2 || ns > (1 << 24) || ny > (1 << 24))
    throw Error("corrupt field dump header: " + path);
  GridSpec g;
  g.s_min = header[0];
  g.s_max = header[1];
  g.n_s = static_cast<int>(ns);
  g.y_period = header[2];
  g.n_y = static_cast<int>(ny);
  g.validate();
  Field f(g, header[3]);
  in.read(reinterpret_cast<char*>(f.values.data()),
          static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!in) throw Error("truncated field dump: " + path);
  return f;
}

}  // namespace tfns
