// tests/test_io.cpp

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "picdiar/io.hpp"
#include "picdiar/rng.hpp"

using namespace picdiar;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("picdiar_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("read_embeddings parses a well-formed file") {
  TempDir tmp;
  write_text(tmp.file("rec1.emb"),
             "# comment\n"
             "0.0 1.5 1 2 3 4\n"
             "0.75 1.5 5 6 7 8\n"
             "1.5 1.5 9 10 11 12\n");
  RecordingEmbeddings rec = read_embeddings(tmp.file("rec1.emb"));
  CHECK(rec.recording_id == "rec1");
  CHECK(rec.size() == 3);
  CHECK(rec.dim == 4);
  CHECK(rec.matrix(1, 2) == 7.0);
}

TEST_CASE("read_embeddings rejects inconsistent dimensions") {
  TempDir tmp;
  write_text(tmp.file("bad.emb"), "0 1 1 2 3 4\n1 1 1 2 3 4 5\n");
  CHECK_THROWS_WITH_AS(read_embeddings(tmp.file("bad.emb")),
                       doctest::Contains(":2:"), Error);
}

TEST_CASE("read_embeddings rejects an empty recording") {
  TempDir tmp;
  write_text(tmp.file("empty.emb"), "# nothing here\n");
  CHECK_THROWS_AS(read_embeddings(tmp.file("empty.emb")), Error);
}

TEST_CASE("read_embeddings rejects non-finite values with line number") {
  TempDir tmp;
  write_text(tmp.file("nan.emb"), "0 1 1 2\n1 1 nan 2\n");
  CHECK_THROWS_WITH_AS(read_embeddings(tmp.file("nan.emb")),
                       doctest::Contains(":2:"), Error);
}

TEST_CASE("read_embeddings re-sorts segments by onset") {
  TempDir tmp;
  write_text(tmp.file("shuffled.emb"), "2.0 1.0 20 20\n0.0 1.0 0 0\n1.0 1.0 10 10\n");
  RecordingEmbeddings rec = read_embeddings(tmp.file("shuffled.emb"));
  CHECK(rec.segments[0].onset == 0.0);
  CHECK(rec.segments[2].onset == 2.0);
  CHECK(rec.matrix(0, 0) == 0.0);
  CHECK(rec.matrix(2, 0) == 20.0);
}

TEST_CASE("embedding round trip preserves the matrix to text precision") {
  TempDir tmp;
  Rng rng(7);
  RecordingEmbeddings rec;
  rec.recording_id = "rt";
  rec.dim = 5;
  rec.matrix.resize(8, 5);
  for (int i = 0; i < 8; ++i) {
    rec.segments.push_back({0.75 * i, 1.5});
    for (int k = 0; k < 5; ++k) rec.matrix(i, k) = rng.normal() * 10.0;
  }
  write_embeddings(rec, tmp.file("rt.emb"));
  RecordingEmbeddings back = read_embeddings(tmp.file("rt.emb"));
  REQUIRE(back.size() == rec.size());
  for (int i = 0; i < 8; ++i)
    for (int k = 0; k < 5; ++k)
      CHECK(back.matrix(i, k) ==
            doctest::Approx(rec.matrix(i, k)).epsilon(1e-7));
}

TEST_CASE("RTTM format and round trip") {
  TempDir tmp;
  SpeakerSegmentation seg;
  seg.recording_id = "rec1";
  seg.turns.push_back({{0.0, 1.5}, "spk1"});
  write_rttm(seg, tmp.file("rec1.rttm"));
  std::ifstream in(tmp.file("rec1.rttm"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "SPEAKER rec1 1 0.000 1.500 <NA> <NA> spk1 <NA> <NA>");

  SUBCASE("ten random turns survive a round trip") {
    Rng rng(3);
    SpeakerSegmentation many;
    many.recording_id = "many";
    double t = 0.0;
    for (int i = 0; i < 10; ++i) {
      const double on = t + std::floor(rng.uniform() * 1000.0) / 1000.0;
      const double dur = 0.5 + std::floor(rng.uniform() * 2000.0) / 1000.0;
      many.turns.push_back({{on, dur}, "spk" + std::to_string(i % 3)});
      t = on + 0.25;
    }
    write_rttm(many, tmp.file("many.rttm"));
    SpeakerSegmentation back = read_rttm(tmp.file("many.rttm"));
    REQUIRE(back.turns.size() == many.turns.size());
    for (size_t i = 0; i < many.turns.size(); ++i) {
      CHECK(back.turns[i].span.onset == doctest::Approx(many.turns[i].span.onset).epsilon(1e-9));
      CHECK(back.turns[i].span.duration ==
            doctest::Approx(many.turns[i].span.duration).epsilon(1e-9));
      CHECK(back.turns[i].speaker == many.turns[i].speaker);
    }
  }

  SUBCASE("onset rounds to three decimals") {
    SpeakerSegmentation s;
    s.recording_id = "r";
    s.turns.push_back({{0.7499, 1.0}, "a"});
    write_rttm(s, tmp.file("round.rttm"));
    SpeakerSegmentation back = read_rttm(tmp.file("round.rttm"));
    CHECK(back.turns[0].span.onset == 0.750);
  }
}

TEST_CASE("read_rttm skips unknown record types and rejects malformed lines") {
  TempDir tmp;
  write_text(tmp.file("mixed.rttm"),
             "SPKR-INFO rec1 1 <NA> <NA> <NA> unknown spk1 <NA>\n"
             "SPEAKER rec1 1 0.000 1.000 <NA> <NA> spk1 <NA> <NA>\n");
  SpeakerSegmentation seg = read_rttm(tmp.file("mixed.rttm"));
  CHECK(seg.turns.size() == 1);

  write_text(tmp.file("bad.rttm"), "SPEAKER rec1 1 0.000\n");
  CHECK_THROWS_AS(read_rttm(tmp.file("bad.rttm")), Error);
}

TEST_CASE("uniform_segments") {
  SUBCASE("windows at multiples of the shift, truncated tail kept when >= shift") {
    // Enumerated from the rule: full windows at 0, 0.75, 1.5, 2.25, then the
    // window at 3.0 truncates to 1.0 (>= shift), reaching the end.
    auto spans = uniform_segments(4.0, 1.5, 0.75);
    REQUIRE(spans.size() == 5);
    for (size_t k = 0; k < spans.size(); ++k)
      CHECK(spans[k].onset == doctest::Approx(0.75 * k).epsilon(1e-12));
    for (size_t k = 0; k + 1 < spans.size(); ++k) CHECK(spans[k].duration == 1.5);
    CHECK(spans.back().duration == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("sub-shift tail dropped") {
    // 4.3s: window at 3.0 truncates to 1.3 and ends the recording.
    auto spans = uniform_segments(4.3, 1.5, 0.75);
    REQUIRE(spans.size() == 5);
    CHECK(spans.back().onset == doctest::Approx(3.0));
    CHECK(spans.back().duration == doctest::Approx(1.3));
    // window < 2*shift: the 1.0s window at 1.5 would truncate to 0.6 < shift.
    auto dropped = uniform_segments(2.1, 1.0, 0.75);
    REQUIRE(dropped.size() == 2);
    CHECK(dropped.back().onset == doctest::Approx(0.75));
    CHECK(dropped.back().duration == doctest::Approx(1.0));
  }
  SUBCASE("exactly one window fits") {
    auto spans = uniform_segments(1.5, 1.5, 0.25);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].onset == 0.0);
    CHECK(spans[0].duration == 1.5);
  }
  SUBCASE("total shorter than the window is an error") {
    CHECK_THROWS_AS(uniform_segments(1.0, 1.5, 0.75), Error);
  }
}
