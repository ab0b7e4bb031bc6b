#include <gtest/gtest.h>

#include <sstream>

#include "seqbal/instances.hpp"
#include "seqbal/io.hpp"

using namespace seqbal;

TEST(Io, FormatNumber) {
  EXPECT_EQ(format_number(1.1), "1.1");
  EXPECT_EQ(format_number(0.1 + 0.2), "0.3");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(0), "0");
  EXPECT_EQ(format_number(1e-9), "1e-09");
}

TEST(Io, ParseNumber) {
  EXPECT_DOUBLE_EQ(parse_number("0.25"), 0.25);
  EXPECT_DOUBLE_EQ(parse_number(" 3 "), 3.0);
  EXPECT_DOUBLE_EQ(parse_number("1e-3"), 1e-3);
  for (const char* bad : {"", "x", "1.5x", "0,5"}) {
    try {
      parse_number(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::parse_error);
    }
  }
}

TEST(Io, Split) {
  EXPECT_EQ(split("a,b,,c", ','), (std::vector<std::string>{"a", "b", "", "c"}));
  EXPECT_EQ(split("x\r", ','), (std::vector<std::string>{"x"}));
}

TEST(Io, HeaderLines) {
  std::ostringstream out;
  write_header(out, {{"seed", "7"}, {"design", "crd"}});
  EXPECT_EQ(out.str(), "# seed=7\n# design=crd\n");
}

TEST(Io, SequenceRoundTrip) {
  const auto seq = gen_uniform(10, 2, 4);
  std::stringstream buf;
  write_header(buf, {{"kind", "uniform"}});
  write_sequence_csv(buf, seq);
  const auto back = read_sequence_csv(buf);
  ASSERT_EQ(back.size(), seq.size());
  EXPECT_EQ(back.space.p(), 2u);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(back.subjects[t][i], seq.subjects[t][i], 1e-11);
  }
}

TEST(Io, MixedColumnsAndInferredSupports) {
  std::istringstream in("c1,d1,d2\n0.5,1,0\n0.25,0,0.5\n");
  const auto seq = read_sequence_csv(in);
  EXPECT_EQ(seq.space.p(), 1u);
  ASSERT_EQ(seq.space.q(), 2u);
  EXPECT_EQ(seq.space.support(0), (std::vector<double>{0, 1}));
  EXPECT_EQ(seq.space.support(1), (std::vector<double>{0, 0.5}));
  EXPECT_EQ(seq.subjects[1].discrete()[1], 0.5);
}

TEST(Io, ExplicitSupports) {
  std::istringstream in("d1\n1\n1\n");
  const auto seq = read_sequence_csv(in, std::vector<std::vector<double>>{{0, 0.5, 1}});
  EXPECT_EQ(seq.space.support(0).size(), 3u);
}

TEST(Io, RejectsMalformedInput) {
  for (const char* text : {"", "# only comments\n", "x1\n0\n", "d1,c1\n0,0\n", "c2\n0\n", "c1,c2\n0.1\n", "c1\nabc\n"}) {
    std::istringstream in(text);
    try {
      read_sequence_csv(in);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::parse_error) << text;
    }
  }
}

TEST(Io, InlinePoints) {
  const auto pts = parse_inline_points("0.1;0.4");
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_DOUBLE_EQ(pts[1][0], 0.4);
  const auto pts2 = parse_inline_points("0.1,0.2;0.3,0.4;");
  ASSERT_EQ(pts2.size(), 2u);
  EXPECT_EQ(pts2[0].dim(), 2u);
}
