#include "tho/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tho {

bool Mask::empty() const {
  return std::none_of(pixels.begin(), pixels.end(), [](std::uint8_t p) { return p != 0; });
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(
      std::count_if(pixels.begin(), pixels.end(), [](std::uint8_t p) { return p != 0; }));
}

Mask mask_union(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("mask_union: masks have different sizes");
  }
  Mask out(a.width, a.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = (a.pixels[i] || b.pixels[i]) ? 255 : 0;
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Mask& mask) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(mask.pixels.data()),
           static_cast<std::streamsize>(mask.pixels.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

namespace {

// Reads the next PGM header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& is) {
  std::string tok;
  char c;
  while (is.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(is, ignored);
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
    } else {
      tok.push_back(c);
    }
  }
  return tok;
}

}  // namespace

Mask read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  if (pgm_token(is) != "P5") throw ParseError(path.string() + ": not a binary PGM (P5)");
  const int w = std::stoi(pgm_token(is));
  const int h = std::stoi(pgm_token(is));
  const int maxval = std::stoi(pgm_token(is));
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw ParseError(path.string() + ": unsupported PGM header");
  }
  Mask m(w, h);
  if (!is.read(reinterpret_cast<char*>(m.pixels.data()), static_cast<std::streamsize>(m.pixels.size()))) {
    throw ParseError(path.string() + ": truncated PGM payload");
  }
  for (auto& p : m.pixels) p = p ? 255 : 0;
  return m;
}

void write_obj(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << std::setprecision(17);
  for (const Vec3& v : mesh.vertices) os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Face& f : mesh.faces) os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Mesh parse_obj(std::istream& is, const std::string& source_name) {
  Mesh mesh;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw ParseError(source_name + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) fail("vertex needs three numbers");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string item;
      while (ls >> item) {
        // Accept "i", "i/t", "i/t/n" and "i//n".
        const std::string head = item.substr(0, item.find('/'));
        int v = 0;
        try {
          std::size_t used = 0;
          v = std::stoi(head, &used);
          if (used != head.size()) fail("bad face index '" + item + "'");
        } catch (const std::logic_error&) {
          fail("bad face index '" + item + "'");
        }
        if (v < 0) v = static_cast<int>(mesh.vertices.size()) + v + 1;
        if (v < 1 || v > static_cast<int>(mesh.vertices.size())) {
          fail("face index " + head + " out of range");
        }
        idx.push_back(v - 1);
      }
      if (idx.size() < 3) fail("face needs at least three vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
    // Other statements (vn, vt, o, g, s, usemtl, ...) carry nothing we use.
  }
  return mesh;
}

Mesh read_obj(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return parse_obj(is, path.string());
}

std::vector<nlohmann::json> read_json_lines(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<nlohmann::json> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_json_lines(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
  std::ostringstream os;
  for (const auto& r : rows) os << r.dump() << '\n';
  write_text(path, os.str());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  write_text(path, value.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace tho
