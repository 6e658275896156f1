#include <doctest.h>

#include "fracdrift/config.hpp"
#include "fracdrift/errors.hpp"

#include <string>

using namespace fracdrift;
using nlohmann::json;

namespace {

std::string message_for(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConfigError);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config: defaults and a full obstacle run") {
  auto c = parse_config(json::object());
  CHECK(c.kernel.s == 0.7);
  REQUIRE(c.domain.has_value());
  CHECK(c.domain->kind == DomainSpec::Kind::Interval);

  auto o = parse_config(json::parse(R"({
    "kernel": {"s": 0.6, "n": 1},
    "domain": {"kind": "interval", "a": -1, "b": 1},
    "problem": "obstacle",
    "obstacle": {"kind": "parabola", "height": 0.4},
    "b": 0.5,
    "grid": {"N": 128},
    "seed": 9
  })"));
  CHECK(o.problem == Problem::obstacle);
  CHECK(o.obstacle.kind == Obstacle::Kind::Parabola);
  CHECK(o.b[0] == 0.5);
  CHECK(o.grid.N == 128);
  CHECK(o.seed == 9);
}

TEST_CASE("config: errors name the offending field") {
  CHECK(message_for(json::parse(R"({"kernel": {"s": 1.5}})")).find("kernel.s") != std::string::npos);
  CHECK(message_for(json::parse(R"({"grid": {"N": "many"}})")).find("grid.N") != std::string::npos);
  CHECK(message_for(json::parse(R"({"colour": 1})")).find("colour") != std::string::npos);
  CHECK(message_for(json::parse(R"({"obstacle": {"kind": "bump", "radius": 0}})")).find("obstacle.radius") !=
        std::string::npos);
  CHECK(message_for(json::parse(R"({"t": [0.1, -1]})")).find("t[1]") != std::string::npos);
  CHECK(message_for(json::parse(R"({"kernel": {"n": 2}, "domain": {"kind": "interval"}})")).find("domain.kind") !=
        std::string::npos);
  CHECK(message_for(json::parse(R"({"criteria": [3, 12]})")).find("criteria[1]") != std::string::npos);
}

TEST_CASE("config: resolved form parses back to itself") {
  auto c = parse_config(json::parse(R"({
    "kernel": {"s": 0.75, "n": 2, "coeffs": [1.0, 0.2], "phase": 0.1},
    "domain": {"kind": "disk", "center": [0.1, 0.0], "radius": 0.5},
    "b": [1.0, -0.5],
    "window": {"lo": 0.01, "hi": 0.1},
    "criteria": [7]
  })"));
  auto r1 = resolved_json(c);
  auto r2 = resolved_json(parse_config(json::parse(r1.dump())));
  CHECK(r1.dump() == r2.dump());
  auto h = parse_config(json::parse(R"({"kernel": {"n": 2}, "domain": {"kind": "halfspace"}})"));
  CHECK_FALSE(h.domain.has_value());
}
