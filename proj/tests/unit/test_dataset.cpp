#include <doctest.h>

#include "openhealth/dataset.hpp"
#include "openhealth/synthetic.hpp"
#include "support.hpp"

using namespace openhealth;
using test_support::TempDir;

namespace {

constexpr const char* kHeader = "t_ms,ax,ay,az,gx,gy,gz,stretch,label\n";

LabeledRecording small_recording(bool stretch) {
    LabeledRecording r;
    for (int i = 0; i < 6; ++i) {
        SensorSample s{i * 10, {quantize_decimal(0.1 * i), -0.5, 1.0}, {1.5, -2.25, 3.0}, std::nullopt};
        if (stretch)
            s.stretch = 0.25;
        r.samples.push_back(s);
    }
    r.annotations = {{0, 20, ActivityLabel::Walk}, {40, 50, ActivityLabel::Sit}};
    return r;
}

} // namespace

TEST_CASE("header is bit exact") {
    CHECK(kDatasetHeader == "t_ms,ax,ay,az,gx,gy,gz,stretch,label");
    CHECK_THROWS_AS(parse_dataset("t_ms,ax,ay,az,gx,gy,gz,label\n"), DatasetError);
    CHECK_THROWS_AS(parse_dataset(""), DatasetError);
}

TEST_CASE("format uses six decimals, empty stretch and empty label for gaps") {
    const auto text = format_dataset(small_recording(false));
    CHECK(text.starts_with(kHeader));
    CHECK(text.find("0,0.000000,-0.500000,1.000000,1.500000,-2.250000,3.000000,,Walk\n") != std::string::npos);
    CHECK(text.find("30,0.300000,-0.500000,1.000000,1.500000,-2.250000,3.000000,,\n") != std::string::npos);
}

TEST_CASE("write then read round trips exactly") {
    TempDir dir;
    for (bool stretch : {false, true}) {
        const auto rec = small_recording(stretch);
        write_dataset(rec, dir / "subject7.csv");
        const auto back = read_dataset(dir / "subject7.csv");
        CHECK(back.samples == rec.samples);
        CHECK(back.annotations == rec.annotations);
        CHECK(back.subject_id == "subject7");
        CHECK(back.has_stretch() == stretch);
    }
}

TEST_CASE("synthetic corpus survives the CSV round trip") {
    const auto rec = generate_synthetic(default_har_model(3), {{ActivityLabel::Walk, 3000}, {ActivityLabel::Sit, 3000}}, 100);
    const auto back = parse_dataset(format_dataset(rec));
    CHECK(back.samples == rec.samples);
    CHECK(back.annotations == rec.annotations);
}

TEST_CASE("parse errors report the offending line") {
    auto expect_line = [](const std::string& body, std::size_t line) {
        try {
            parse_dataset(std::string(kHeader) + body);
            FAIL("expected DatasetError");
        } catch (const DatasetError& e) {
            CHECK(e.line() == line);
        }
    };
    expect_line("0,0,0,1,0,0,0,,Walk\n10,0,0,1,0,0,,Walk\n", 3);          // 8 columns
    expect_line("0,0,0,1,0,0,0,,Walk\n0,0,0,1,0,0,0,,Walk\n", 3);         // repeated timestamp
    expect_line("0,0,0,1,0,0,0,,Skip\n", 2);                              // unknown label
    expect_line("0,0,0,1,0,0,0,,Walk\n10,0,0,1,0,0,0,,Up\n", 3);          // mixed label sets
    expect_line("0,0,0,1,0,0,0,0.5,Walk\n10,0,0,1,0,0,0,,Walk\n", 3);     // stretch on some rows
    expect_line("0,0,0,abc,0,0,0,,Walk\n", 2);                            // not a number
    expect_line("0,0,0,17,0,0,0,,Walk\n", 2);                             // beyond full scale
    expect_line("0.5,0,0,1,0,0,0,,Walk\n", 2);                            // fractional time
}

TEST_CASE("annotations are rebuilt from label runs") {
    const auto rec = parse_dataset(std::string(kHeader) +
                                   "0,0,0,1,0,0,0,,Walk\n10,0,0,1,0,0,0,,Walk\n20,0,0,1,0,0,0,,\n"
                                   "30,0,0,1,0,0,0,,Walk\n40,0,0,1,0,0,0,,Sit\n\n");
    REQUIRE(rec.annotations.size() == 3);
    CHECK(rec.annotations[0] == Annotation{0, 10, ActivityLabel::Walk});
    CHECK(rec.annotations[1] == Annotation{30, 30, ActivityLabel::Walk});
    CHECK(rec.annotations[2] == Annotation{40, 40, ActivityLabel::Sit});
}

TEST_CASE("write refuses invalid recordings before touching the file") {
    TempDir dir;
    auto rec = small_recording(false);
    rec.samples[2].accel[0] = 20.0;
    CHECK_THROWS_AS(write_dataset(rec, dir / "bad.csv"), InvalidRecording);
    CHECK_FALSE(std::filesystem::exists(dir / "bad.csv"));
}

TEST_CASE("missing file is a dataset error") {
    CHECK_THROWS_AS(read_dataset("/nonexistent/file.csv"), DatasetError);
}

TEST_CASE("raw storage arithmetic") {
    // 250 samples/s * 3 channels * 2 bytes * 3600 s
    CHECK(storage_budget(250, 3, 2, 3600) == 5'400'000.0);
    CHECK(storage_budget(100, 7, 2, 3600) == 5'040'000.0);
    CHECK_THROWS_AS(storage_budget(0, 3, 2, 3600), std::invalid_argument);
    CHECK_THROWS_AS(storage_budget(250, 0, 2, 3600), std::invalid_argument);
}

TEST_CASE("decimal quantization") {
    CHECK(quantize_decimal(0.1234564) == 0.123456);
    CHECK(quantize_decimal(-0.0000001) == 0.0);
    CHECK_FALSE(std::signbit(quantize_decimal(-0.0000001)));
}
