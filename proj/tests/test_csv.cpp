#include <sstream>

#include <gtest/gtest.h>

#include "netcontrol/csv.hpp"

using namespace netcontrol;

TEST(Csv, SplitsQuotedFields) {
    const auto f = csv::split_line(R"(a, "b,c" ,"say ""hi""",  d )", 1, "t");
    ASSERT_EQ(f.size(), 4u);
    EXPECT_EQ(f[0], "a");
    EXPECT_EQ(f[1], "b,c");
    EXPECT_EQ(f[2], "say \"hi\"");
    EXPECT_EQ(f[3], "d");
}

TEST(Csv, UnterminatedQuoteIsMalformed) {
    try {
        csv::split_line("\"abc", 7, "file.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedRow);
        EXPECT_EQ(e.context(), "file.csv:7");
    }
}

TEST(Csv, HeaderIsCaseInsensitiveAndStripsBom) {
    std::istringstream in("\xef\xbb\xbfOwner_ID,owned_id,SHARE\n\nA,B,0.5\n");
    csv::Reader r(in, "edges");
    EXPECT_TRUE(r.expect_header({"owner_id", "owned_id", "share"}));
    const auto row = r.next();
    ASSERT_TRUE(row);
    EXPECT_EQ(row->line, 3u);
    EXPECT_FALSE(r.next());
}

TEST(Csv, WrongHeaderThrows) {
    std::istringstream in("a,b,c\n");
    csv::Reader r(in, "edges");
    EXPECT_THROW(r.expect_header({"owner_id", "owned_id", "share"}), Error);
}

TEST(Csv, ParseDouble) {
    EXPECT_EQ(csv::parse_double(" 0.25 "), 0.25);
    EXPECT_EQ(csv::parse_double("+1e-3"), 1e-3);
    EXPECT_FALSE(csv::parse_double("abc"));
    EXPECT_FALSE(csv::parse_double("0.5x"));
    EXPECT_FALSE(csv::parse_double(""));
    EXPECT_FALSE(csv::parse_double("nan"));
}

TEST(Csv, FormatDoubleRoundTrips) {
    for (double v : {0.0, 0.1, 1.0 / 3.0, 0.525, 1e-17, 123456.789}) {
        EXPECT_EQ(*csv::parse_double(csv::format_double(v)), v);
    }
    EXPECT_EQ(csv::format_double(0.0), "0");
    EXPECT_EQ(csv::format_double(-0.0), "0");
}

TEST(Csv, WriterQuotesWhenNeeded) {
    std::ostringstream out;
    csv::Writer w(out);
    w.field("plain").field("a,b").field(" padded").field(0.5).field(std::uint64_t{3});
    w.end_row();
    EXPECT_EQ(out.str(), "plain,\"a,b\",\" padded\",0.5,3\n");
}
