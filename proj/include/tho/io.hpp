#pragma once

// File formats shared across modules: binary PGM masks, Wavefront OBJ meshes,
// JSON-lines records.

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tho/geometry.hpp"

namespace tho {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary image mask; nonzero is foreground.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool on = true) {
    pixels[static_cast<std::size_t>(y) * width + x] = on ? 255 : 0;
  }
  bool empty() const;
  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;
};

Mask mask_union(const Mask& a, const Mask& b);

void write_pgm(const std::filesystem::path& path, const Mask& mask);
Mask read_pgm(const std::filesystem::path& path);

using Face = std::array<int, 3>;

struct Mesh {
  Points vertices;
  std::vector<Face> faces;
};

void write_obj(const std::filesystem::path& path, const Mesh& mesh);
// Throws ParseError naming the offending line number.
Mesh parse_obj(std::istream& is, const std::string& source_name = "<obj>");
Mesh read_obj(const std::filesystem::path& path);

std::vector<nlohmann::json> read_json_lines(const std::filesystem::path& path);
void write_json_lines(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& value);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace tho
