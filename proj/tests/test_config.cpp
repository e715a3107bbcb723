#include "lora_nbi/experiment_config.hpp"

#include <gtest/gtest.h>

using namespace lora_nbi;

namespace {

std::string error_of(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, Defaults) {
    const auto c = parse_config("experiment = fit_table\n");
    EXPECT_EQ(c.experiment, ExperimentKind::fit_table);
    EXPECT_EQ(c.sf_list, std::vector<int>{7});
    EXPECT_EQ(c.kind_list.size(), 3u);
    EXPECT_EQ(c.trials, 10000u);
    EXPECT_EQ(c.seed, 1u);
    EXPECT_DOUBLE_EQ(c.inr_step_db, 0.5);
    EXPECT_DOUBLE_EQ(c.start_offset_db, 40.0);
    EXPECT_DOUBLE_EQ(c.noise.bandwidth_hz, 125000.0);
    EXPECT_DOUBLE_EQ(c.noise.noise_figure_db, 6.0);
    EXPECT_DOUBLE_EQ(c.interferer.bit_rate_hz, 600.0);
    EXPECT_DOUBLE_EQ(c.interferer.occupied_bandwidth_hz, 600.0);
    EXPECT_EQ(c.output_format, OutputFormat::csv);
    EXPECT_EQ(c.resolved_output(), "fit_table.csv");
}

TEST(Config, ParsesListsGridsAndComments) {
    const auto c = parse_config(
        "# noise-only sweep\n"
        "experiment = ser_vs_rssi   # trailing comment\n"
        "sf = 7, 9,12\n"
        "kind = gmsk\n"
        "rssi_grid = -140:-120:0.5\n"
        "snr_grid = 3\n"
        "seed = 18446744073709551615\n"
        "format = json\n");
    EXPECT_EQ(c.sf_list, (std::vector<int>{7, 9, 12}));
    EXPECT_EQ(c.kind_list, std::vector<InterfererKind>{InterfererKind::gmsk});
    EXPECT_EQ(c.rssi_grid.values().size(), 41u);
    EXPECT_DOUBLE_EQ(c.rssi_grid.values().back(), -120.0);
    EXPECT_EQ(c.snr_grid.values(), std::vector<double>{3.0});
    EXPECT_EQ(c.seed, 18446744073709551615ull);
    EXPECT_EQ(c.resolved_output(), "ser_vs_rssi.json");
}

TEST(Config, GridValuesIncludeStopDespiteRounding) {
    const Grid g{0.0, 1.0, 0.1};
    EXPECT_EQ(g.values().size(), 11u);
}

TEST(Config, TrialsZeroRejected) {
    const auto msg = error_of("experiment = ser_vs_inr\ntrials = 0\n");
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("trials"), std::string::npos) << msg;
    EXPECT_NE(msg.find("at least 1"), std::string::npos) << msg;
}

TEST(Config, UnknownKeySuggestsNearest) {
    try {
        parse_config("experiment = ser_vs_inr\n\ntrails = 100\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.key(), "trails");
        EXPECT_NE(std::string(e.what()).find("did you mean `trials`"), std::string::npos) << e.what();
    }
    EXPECT_EQ(error_of("experiment = fit_table\nzzzzzzzz = 1\n").find("did you mean"), std::string::npos);
}

TEST(Config, MalformedValues) {
    EXPECT_NE(error_of("experiment = fit_table\nrssi_grid = 1:2\n").find("malformed grid"), std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\nrssi_grid = 5:1:1\n").find("below start"), std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\nrssi_grid = 1:5:0\n").find("step must be positive"),
              std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\nkind = fsk\n").find("unknown interferer kind"), std::string::npos);
    EXPECT_NE(error_of("experiment = nope\n").find("unknown experiment"), std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\nsf = 13\n").find("outside 7..12"), std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\nsf = 7,7\n").find("twice"), std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\ntrials = 1e3\n").find("non-negative integer"), std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\nseed = -1\n").find("non-negative integer"), std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\ninr_step_db = 0\n").find("positive"), std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\nformat = xml\n").find("csv or json"), std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\nbpsk_rolloff = 1.5\n").find("roll-off"), std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\nfit_snr_offsets = 0:10:1\n").find("above the pole"),
              std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\nnoise_figure_db = nan\n").find("expected a number"),
              std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\njust words\n").find("key = value"), std::string::npos);
    EXPECT_NE(error_of("experiment = fit_table\ntrials =\n").find("empty value"), std::string::npos);
}

TEST(Config, DuplicateKeyNamesFirstLine) {
    const auto msg = error_of("experiment = fit_table\nseed = 1\nseed = 2\n");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("first set on line 2"), std::string::npos) << msg;
}

TEST(Config, MissingExperiment) {
    EXPECT_NE(error_of("seed = 3\n").find("missing required key `experiment`"), std::string::npos);
    const auto c = parse_config("seed = 3\n", ExperimentKind::validate_spa);
    EXPECT_EQ(c.experiment, ExperimentKind::validate_spa);
    EXPECT_EQ(c.seed, 3u);
}

TEST(Config, CrossFieldValidation) {
    EXPECT_NE(error_of("experiment = fit_table\noccupied_bandwidth_hz = 200000\n").find("below bandwidth_hz"),
              std::string::npos);
}

TEST(Config, RenderRoundTrips) {
    ExperimentConfig c;
    c.experiment = ExperimentKind::inr_threshold;
    c.sf_list = {8, 11};
    c.kind_list = {InterfererKind::awgn_control, InterfererKind::bpsk};
    c.snr_grid = {-3.5, 20.25, 0.25};
    c.trials = 1234;
    c.seed = 987654321987654321ull;
    c.output_path = "out/th.json";
    c.points_output = "out/points.csv";
    c.output_format = OutputFormat::json;
    c.noise.noise_figure_db = 4.1;
    c.interferer.bpsk_pulse = PulseFamily::raised_cosine;
    c.interferer.bpsk_rolloff = 0.35;
    c.dump_freq_offset_hz = -1e-3;
    c.start_offset_db = 0.1 + 0.2;  // not exactly representable in short decimal
    EXPECT_EQ(parse_config(render_config(c)), c);
    const ExperimentConfig d;
    EXPECT_EQ(parse_config(render_config(d)), d);
}

TEST(Config, SetConfigValue) {
    ExperimentConfig c;
    set_config_value(c, " trials ", " 50 ");
    EXPECT_EQ(c.trials, 50u);
    set_config_value(c, "sf", "10,12");
    EXPECT_EQ(c.sf_list, (std::vector<int>{10, 12}));
    try {
        set_config_value(c, "trials", "0");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 0u);
        EXPECT_EQ(e.key(), "trials");
        EXPECT_EQ(std::string(e.what()).rfind("line", 0), std::string::npos);
    }
    EXPECT_EQ(c.trials, 50u);
    EXPECT_THROW(set_config_value(c, "occupied_bandwidth_hz", "1e9"), ConfigError);
}

TEST(Config, EditDistance) {
    EXPECT_EQ(detail::edit_distance("trails", "trials"), 2u);
    EXPECT_EQ(detail::edit_distance("", "abc"), 3u);
    EXPECT_EQ(detail::edit_distance("seed", "seed"), 0u);
}
