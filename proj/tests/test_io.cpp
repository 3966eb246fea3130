#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "tho/io.hpp"

using namespace tho;
using namespace tho::testing;

TEST_CASE("PGM masks round trip") {
  TempDir dir("pgm");
  Rng rng(1);
  Mask m(13, 7);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 13; ++x)
      if (rng.uniform() < 0.3) m.set(x, y);
  write_pgm(dir / "m.pgm", m);
  CHECK(slurp(dir / "m.pgm").substr(0, 2) == "P5");
  CHECK(read_pgm(dir / "m.pgm") == m);
}

TEST_CASE("PGM nonzero reads as foreground") {
  TempDir dir("pgm2");
  spit(dir / "g.pgm", std::string("P5\n# comment\n3 1\n255\n") + std::string("\x00\x07\xff", 3));
  const Mask m = read_pgm(dir / "g.pgm");
  CHECK_FALSE(m.at(0, 0));
  CHECK(m.at(1, 0));
  CHECK(m.at(2, 0));
  spit(dir / "bad.pgm", "P2\n1 1\n255\n0");
  CHECK_THROWS_AS(read_pgm(dir / "bad.pgm"), ParseError);
  spit(dir / "short.pgm", "P5\n4 4\n255\nab");
  CHECK_THROWS_AS(read_pgm(dir / "short.pgm"), ParseError);
}

TEST_CASE("mask helpers") {
  Mask a(4, 3), b(4, 3);
  CHECK(a.empty());
  a.set(0, 0);
  b.set(3, 2);
  b.set(0, 0);
  const Mask u = mask_union(a, b);
  CHECK(u.count() == 2);
  CHECK(u.at(3, 2));
  CHECK_FALSE(u.in_bounds(4, 0));
  CHECK_THROWS(mask_union(a, Mask(3, 3)));
}

TEST_CASE("OBJ parsing") {
  SUBCASE("vertices, faces, polygons and index forms") {
    std::istringstream is(
        "# box corner\n"
        "o thing\n"
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
        "vn 0 0 1\n"
        "f 1/1/1 2//1 3\n"
        "f -4 -2 -1\n"
        "f 1 2 3 4\n");
    const Mesh m = parse_obj(is);
    CHECK(m.vertices.size() == 4);
    REQUIRE(m.faces.size() == 4);
    CHECK(m.faces[0] == Face{0, 1, 2});
    CHECK(m.faces[1] == Face{0, 2, 3});
    CHECK(m.faces[3] == Face{0, 2, 3});
  }
  SUBCASE("errors name the line") {
    std::istringstream bad_vertex("v 0 0 0\nv 1 0\n");
    try {
      parse_obj(bad_vertex, "cup.obj");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("cup.obj:2:") != std::string::npos);
    }
    std::istringstream bad_index("v 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1 2 9\n");
    try {
      parse_obj(bad_index, "cup.obj");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("cup.obj:5:") != std::string::npos);
    }
    std::istringstream junk("v 0 0 0\nf a b c\n");
    CHECK_THROWS_AS(parse_obj(junk), ParseError);
  }
  SUBCASE("write then read") {
    TempDir dir("obj");
    Rng rng(2);
    Mesh m{rng.points(6), {{0, 1, 2}, {3, 4, 5}, {0, 2, 4}}};
    write_obj(dir / "m.obj", m);
    const Mesh back = read_obj(dir / "m.obj");
    CHECK(back.faces == m.faces);
    for (std::size_t i = 0; i < 6; ++i) CHECK(back.vertices[i] == m.vertices[i]);
  }
}

TEST_CASE("JSON lines") {
  TempDir dir("jsonl");
  const std::vector<nlohmann::json> rows = {{{"frame", 0}}, {{"frame", 1}, {"x", 2.5}}};
  write_json_lines(dir / "a.jsonl", rows);
  CHECK(read_json_lines(dir / "a.jsonl") == rows);
  spit(dir / "b.jsonl", "{\"a\": 1}\n{oops\n");
  try {
    read_json_lines(dir / "b.jsonl");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("b.jsonl:2:") != std::string::npos);
  }
}
