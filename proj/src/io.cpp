#include "waveinv/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

namespace waveinv {

namespace {

constexpr char kMagic[5] = {'W', 'F', 'L', 'D', '1'};

static_assert(std::endian::native == std::endian::little, "WFLD1 writer assumes a little-endian host");

template <class T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("truncated WFLD1 file");
  return v;
}

std::vector<std::uint32_t> field_shape(const Grid& g) {
  std::vector<std::uint32_t> s{static_cast<std::uint32_t>(g.levels())};
  if (g.dim() == 2) s.push_back(static_cast<std::uint32_t>(g.nodes_along(1)));
  s.push_back(static_cast<std::uint32_t>(g.nodes_along(0)));
  return s;
}

}  // namespace

void write_wfld(const std::filesystem::path& path, const WfldArray& a) {
  std::size_t count = 1;
  for (auto s : a.shape) count *= s;
  if (a.data.size() != count * (a.complex ? 2 : 1)) throw PreconditionError("WFLD1 payload does not match shape");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof kMagic);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(a.shape.size()));
  for (auto s : a.shape) put<std::uint32_t>(os, s);
  put<std::uint8_t>(os, a.complex ? 1 : 0);
  os.write(reinterpret_cast<const char*>(a.data.data()), static_cast<std::streamsize>(a.data.size() * sizeof(double)));
  if (!os) throw Error("failed writing " + path.string());
}

WfldArray read_wfld(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  char magic[5];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error("not a WFLD1 file: " + path.string());
  WfldArray a;
  const auto dim = get<std::uint8_t>(is);
  std::size_t count = 1;
  for (int i = 0; i < dim; ++i) {
    a.shape.push_back(get<std::uint32_t>(is));
    count *= a.shape.back();
  }
  const auto kind = get<std::uint8_t>(is);
  if (kind > 1) throw Error("unknown WFLD1 scalar kind");
  a.complex = kind == 1;
  a.data.resize(count * (a.complex ? 2 : 1));
  is.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(a.data.size() * sizeof(double)));
  if (!is) throw Error("truncated WFLD1 payload");
  return a;
}

void write_field(const std::filesystem::path& path, const Field& f) {
  write_wfld(path, {field_shape(f.grid()), false, f.values()});
}

void write_field(const std::filesystem::path& path, const ComplexField& f) {
  WfldArray a{field_shape(f.grid()), true, {}};
  a.data.reserve(f.size() * 2);
  for (const auto& v : f.values()) {
    a.data.push_back(v.real());
    a.data.push_back(v.imag());
  }
  write_wfld(path, a);
}

void write_state(const std::filesystem::path& path, const Grid& g, const Spatial& u, const Spatial& ut) {
  auto shape = field_shape(g);
  shape[0] = 2;
  WfldArray a{shape, false, u};
  a.data.insert(a.data.end(), ut.begin(), ut.end());
  write_wfld(path, a);
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_trace_csv(const std::filesystem::path& path, const BoundaryTrace& tr) {
  const Grid& g = *tr.grid;
  CsvWriter w(path);
  const bool flux2d = g.dim() == 2 && tr.quantity == Quantity::neumann_flux;
  std::vector<std::string> cols{"t", "x"};
  if (g.dim() == 2) cols.push_back("y");
  if (flux2d) cols.push_back("edge");
  cols.push_back("value");
  w.header(cols);
  for (int n = 0; n < g.levels(); ++n) {
    for (std::size_t p = 0; p < tr.points.size(); ++p) {
      const Point x = g.coord(tr.points[p].node);
      std::vector<double> row{g.time(n), x[0]};
      if (g.dim() == 2) row.push_back(x[1]);
      if (flux2d) row.push_back(tr.points[p].edge);
      row.push_back(tr.at(n, p));
      w.row(row);
    }
  }
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : path_(path) {}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
}

void CsvWriter::header(const std::vector<std::string>& cols) { row_text(cols); }

void CsvWriter::row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += fmt(values[i]);
  }
  buf_ += '\n';
}

void CsvWriter::row_text(const std::vector<std::string>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) buf_ += ',';
    const std::string& v = values[i];
    if (v.find_first_of(",\"\n") == std::string::npos) {
      buf_ += v;
      continue;
    }
    buf_ += '"';
    for (char ch : v) {
      if (ch == '"') buf_ += '"';
      buf_ += ch;
    }
    buf_ += '"';
  }
  buf_ += '\n';
}

void CsvWriter::close() {
  if (flushed_) return;
  flushed_ = true;
  std::ofstream os(path_, std::ios::binary);
  if (!os) throw Error("cannot open " + path_.string() + " for writing");
  os << buf_;
}

}  // namespace waveinv
