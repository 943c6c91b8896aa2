#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "portcast/csv.hpp"
#include "portcast/rng.hpp"

using namespace portcast;

namespace {

std::vector<std::vector<std::string>> read_all(const std::string& text) {
  std::istringstream in(text);
  CsvReader reader(in);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  while (reader.next(fields)) records.push_back(fields);
  return records;
}

}  // namespace

TEST_SUITE("csv") {

TEST_CASE("plain records") {
  const auto records = read_all("a,b,c\n1,2,3\n");
  REQUIRE(records.size() == 2);
  CHECK(records[0] == std::vector<std::string>{"a", "b", "c"});
  CHECK(records[1] == std::vector<std::string>{"1", "2", "3"});
}

TEST_CASE("empty fields and missing trailing newline") {
  const auto records = read_all("a,,c\n,,");
  REQUIRE(records.size() == 2);
  CHECK(records[0] == std::vector<std::string>{"a", "", "c"});
  CHECK(records[1] == std::vector<std::string>{"", "", ""});
}

TEST_CASE("quoted fields") {
  const auto records = read_all("\"a,b\",\"c\"\"d\",\"e\nf\"\n");
  REQUIRE(records.size() == 1);
  CHECK(records[0] == std::vector<std::string>{"a,b", "c\"d", "e\nf"});
}

TEST_CASE("crlf line endings") {
  const auto records = read_all("a,b\r\nc,d\r\n");
  REQUIRE(records.size() == 2);
  CHECK(records[0] == std::vector<std::string>{"a", "b"});
  CHECK(records[1] == std::vector<std::string>{"c", "d"});
}

TEST_CASE("record_line counts physical lines") {
  std::istringstream in("h1,h2\n\"multi\nline\",x\nlast,y\n");
  CsvReader reader(in);
  std::vector<std::string> fields;
  REQUIRE(reader.next(fields));
  CHECK(reader.record_line() == 1);
  REQUIRE(reader.next(fields));
  CHECK(reader.record_line() == 2);  // record starts on line 2, spans line 3
  REQUIRE(reader.next(fields));
  CHECK(fields[0] == "last");
  CHECK(reader.record_line() == 4);
  CHECK(!reader.next(fields));
}

TEST_CASE("escape and join") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("with,comma") == "\"with,comma\"");
  CHECK(csv_escape("with\"quote") == "\"with\"\"quote\"");
  CHECK(csv_escape("with\nnewline") == "\"with\nnewline\"");
  CHECK(csv_join({"a", "b,c", ""}) == "a,\"b,c\",");
}

TEST_CASE("join/parse round trip on random fields") {
  Rng rng(99);
  const std::string alphabet = "ab,\"\n x-0";
  for (int iter = 0; iter < 80; ++iter) {
    std::vector<std::string> fields(1 + rng.index(5));
    for (std::string& f : fields) {
      const std::size_t len = rng.index(8);
      for (std::size_t i = 0; i < len; ++i) f.push_back(alphabet[rng.index(alphabet.size())]);
    }
    const auto records = read_all(csv_join(fields) + "\n");
    REQUIRE(records.size() == 1);
    CHECK(records[0] == fields);
  }
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(3.0) == "3");
  CHECK(format_double(20854.0) == "20854");
  CHECK(format_double(-2.5) == "-2.5");
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const double v = (rng.next_double() - 0.5) * 1e6;
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}

}  // TEST_SUITE
