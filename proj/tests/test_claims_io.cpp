#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "eot/claims_io.hpp"

using namespace eot;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path("eot_io_test_" + name) {
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE_BEGIN("claims_io");

TEST_CASE("comma separated file with header and column selection") {
  TempFile f("a.csv",
             "date,loss\n"
             "1980-01-03,1.68\n"
             "1980-01-04,2.09\n"
             "1980-01-05,1.73\n");
  const auto ds = load_claims(f.path, 2);
  CHECK(ds.n == 3);
  CHECK(ds.values[0] == doctest::Approx(1.68));
  CHECK(ds.values[2] == doctest::Approx(1.73));
  CHECK(ds.source == f.path);
}

TEST_CASE("whitespace separated file is autodetected") {
  TempFile f("b.txt", "3.5\n0.31\n263.30\n\n7.2\n");
  const auto ds = load_claims(f.path);
  CHECK(ds.n == 4);
  CHECK(ds.values[1] == doctest::Approx(0.31));
  CHECK(ds.values[2] == doctest::Approx(263.30));
}

TEST_CASE("single value file loads") {
  TempFile f("c.txt", "12.5\n");
  const auto ds = load_claims(f.path);
  CHECK(ds.n == 1);
}

TEST_CASE("zero or negative claims are rejected with the line number") {
  TempFile f("d.csv", "1.0\n2.0\n0.0\n3.0\n");
  try {
    load_claims(f.path);
    FAIL("expected data_error");
  } catch (const data_error& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("non-numeric data after the header is rejected") {
  TempFile f("e.csv", "loss\n1.5\nnot-a-number\n");
  try {
    load_claims(f.path);
    FAIL("expected data_error");
  } catch (const data_error& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("missing column and missing file") {
  TempFile f("f.csv", "1.0,2.0\n");
  CHECK_THROWS_AS(load_claims(f.path, 3), data_error);
  CHECK_THROWS_AS(load_claims("no_such_file_anywhere.csv"), data_error);
  TempFile g("g.csv", "loss\n");
  CHECK_THROWS_AS(load_claims(g.path), data_error);  // only a header, no data
}

TEST_SUITE_END();
