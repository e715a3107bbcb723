#include "lora_nbi/channel.hpp"

#include <gtest/gtest.h>

using namespace lora_nbi;

namespace {

Scenario scenario(int sf, double snr_db, std::optional<InterfererKind> kind = std::nullopt, double inr_db = 0.0) {
    Scenario s;
    s.cfg = LoRaConfig(sf);
    s.snr_db = snr_db;
    if (kind) {
        InterfererParams ip;
        ip.kind = *kind;
        s.interferer = ip;
        s.inr_db = inr_db;
    }
    return s;
}

bool overlap(const SerEstimate& a, const SerEstimate& b) {
    return a.ci_low() <= b.ci_high() && b.ci_low() <= a.ci_high();
}

}  // namespace

TEST(NoiseModel, DefaultFloor) {
    const NoiseModel nm;
    EXPECT_NEAR(nm.thermal_dbm(), -123.0, 0.05);
    EXPECT_NEAR(nm.noise_floor_dbm(), -117.0, 0.5);
    EXPECT_NEAR(nm.noise_floor_dbm(), 10.0 * std::log10(kBoltzmann * 290.0 * 125000.0 / 1e-3) + 6.0, 1e-12);
    EXPECT_NEAR(mw_to_dbm(nm.noise_power_mw()), nm.noise_floor_dbm(), 1e-12);
}

TEST(Units, Conversions) {
    EXPECT_DOUBLE_EQ(dbm_to_mw(0.0), 1.0);
    EXPECT_DOUBLE_EQ(dbm_to_mw(-30.0), 1e-3);
    EXPECT_NEAR(mw_to_dbm(dbm_to_mw(-117.3)), -117.3, 1e-12);
    EXPECT_DOUBLE_EQ(db_to_ratio(10.0), 10.0);
}

TEST(SerEstimate, WilsonInterval) {
    const SerEstimate zero{0, 10000};
    EXPECT_EQ(zero.ser(), 0.0);
    EXPECT_EQ(zero.ci_low(), 0.0);
    EXPECT_NEAR(zero.ci_high(), 3.84e-4, 1e-6);
    const SerEstimate half{5000, 10000};
    EXPECT_NEAR(half.ci_low(), 0.4902, 1e-4);
    EXPECT_NEAR(half.ci_high(), 0.5098, 1e-4);
    const SerEstimate all{10, 10};
    EXPECT_NEAR(all.ci_high(), 1.0, 1e-12);
    EXPECT_GE(all.ci_low(), 0.0);
}

TEST(Scenario, Validation) {
    auto s = scenario(7, 0.0, InterfererKind::gmsk, 3.0);
    EXPECT_NO_THROW(s.validate());
    s.inr_db.reset();
    EXPECT_THROW(s.validate(), std::domain_error);
    s = scenario(7, 0.0);
    s.trials = 0;
    EXPECT_THROW(s.validate(), std::domain_error);
    const auto r = Scenario::from_rssi(LoRaConfig(7), NoiseModel{}, -123.0);
    EXPECT_NEAR(r.rssi_dbm(), -123.0, 1e-12);
    EXPECT_NEAR(r.snr_db, -123.0 - NoiseModel{}.noise_floor_dbm(), 1e-12);
}

TEST(TrialStatistic, NoiselessNoInterfererHasSingleBin) {
    auto s = scenario(7, 10.0);
    s.noise_enabled = false;
    RngStream rng(1, 0);
    const auto stat = build_trial_statistic(s, 42, rng);
    const double peak = std::sqrt(s.signal_power_mw()) * 128.0;
    for (std::size_t k = 0; k < 128; ++k) {
        if (k == 42) {
            EXPECT_EQ(stat[k], cplx(peak, 0.0));
        } else {
            EXPECT_EQ(stat[k], cplx(0.0, 0.0));
        }
    }
}

TEST(TrialStatistic, DeterministicForFixedSeed) {
    for (auto kind : {InterfererKind::bpsk, InterfererKind::gmsk, InterfererKind::awgn_control}) {
        const auto s = scenario(8, 0.0, kind, 5.0);
        RngStream a(77, 5), b(77, 5);
        const auto x = build_trial_statistic(s, 17, a);
        const auto y = build_trial_statistic(s, 17, b);
        for (std::size_t k = 0; k < x.size(); ++k) ASSERT_EQ(x[k], y[k]);
    }
}

TEST(TrialStatistic, TimeDomainNoiselessPeak) {
    auto s = scenario(9, 3.0);
    s.noise_enabled = false;
    for (std::size_t p : {0u, 1u, 300u, 511u}) {
        RngStream rng(2, p);
        const auto stat = build_trial_statistic_timedomain(s, p, rng);
        EXPECT_EQ(demodulate(stat), p);
        const double peak = std::sqrt(s.signal_power_mw()) * 512.0;
        EXPECT_NEAR(std::abs(stat[p]), peak, 1e-6 * peak);
    }
}

TEST(TrialStatistic, NoiseBinVarianceCalibrated) {
    // Zero signal bin excluded; variance per dimension should be N * P_n / 2.
    for (auto path : {TrialPath::hybrid, TrialPath::time_domain}) {
        const auto s = scenario(7, -60.0);
        const TrialEngine engine(s);
        const std::size_t n = 128, trials = 10000;
        std::vector<double> re2(n, 0.0), im2(n, 0.0);
        const InterferenceBatch none;
        for (std::size_t t = 0; t < trials; ++t) {
            RngStream rng(s.seed, t);
            const std::size_t p = rng.uniform_index(n);
            std::vector<cplx> bins;
            if (path == TrialPath::hybrid) {
                bins = engine.draw_components(p, rng, none).noise;
            } else {
                const auto st = engine.time_domain_statistic(p, rng, none, 0.0 + 1e-300, 0.0);
                bins.assign(st.bins().begin(), st.bins().end());
            }
            for (std::size_t k = 0; k < n; ++k) {
                re2[k] += bins[k].real() * bins[k].real();
                im2[k] += bins[k].imag() * bins[k].imag();
            }
        }
        const double expected = double(n) * s.noise_power_mw() / 2.0;
        for (std::size_t k = 0; k < n; ++k) {
            EXPECT_NEAR(re2[k] / trials / expected, 1.0, 0.05) << "bin " << k;
            EXPECT_NEAR(im2[k] / trials / expected, 1.0, 0.05) << "bin " << k;
        }
    }
}

TEST(EstimateSer, HighSnrIsErrorFree) {
    const auto e = estimate_ser(scenario(7, 30.0));
    EXPECT_LE(e.errors, 1u);
    EXPECT_EQ(e.trials, 10000u);
}

TEST(EstimateSer, ZeroErrorThresholdAnchors) {
    const NoiseModel nm;
    EXPECT_EQ(estimate_ser(Scenario::from_rssi(LoRaConfig(7), nm, -123.0)).errors, 0u);
    EXPECT_GT(estimate_ser(Scenario::from_rssi(LoRaConfig(7), nm, -126.0)).errors, 0u);
    EXPECT_EQ(estimate_ser(Scenario::from_rssi(LoRaConfig(12), nm, -137.0)).errors, 0u);
}

TEST(EstimateSer, IndependentOfWorkerCount) {
    const auto s = scenario(8, -12.0, InterfererKind::bpsk, 2.0);
    const auto one = estimate_ser(s, 1);
    const auto many = estimate_ser(s, 4);
    EXPECT_EQ(one.errors, many.errors);
    EXPECT_GT(one.errors, 0u);
}

TEST(EstimateSer, HybridMatchesTimeDomain) {
    // Noise only, then one interferer of each kind in the transition region.
    std::vector<Scenario> cases = {scenario(7, -6.0), scenario(7, -9.0),
                                   scenario(7, 0.0, InterfererKind::awgn_control, 4.0),
                                   scenario(7, 0.0, InterfererKind::bpsk, 8.0),
                                   scenario(7, 0.0, InterfererKind::gmsk, 12.0)};
    for (auto& s : cases) {
        s.trials = 10000;
        const auto h = estimate_ser(s, default_workers(), TrialPath::hybrid);
        auto s2 = s;
        s2.seed = 999;  // independent draws for the second route
        const auto t = estimate_ser(s2, default_workers(), TrialPath::time_domain);
        EXPECT_TRUE(overlap(h, t)) << "snr " << s.snr_db << " hybrid " << h.errors << " time " << t.errors;
    }
}

TEST(TrialEngine, OffsetRangeKeepsInterfererInBand) {
    const auto s = scenario(7, 0.0, InterfererKind::gmsk, 0.0);
    const TrialEngine e(s);
    const auto [lo, hi] = e.offset_range();
    EXPECT_DOUBLE_EQ(lo, -62500.0 + 300.0);
    EXPECT_DOUBLE_EQ(hi, 62500.0 - 300.0);
}

TEST(TrialEngine, BatchWaveformIsUnitPowerAndGuarded) {
    for (auto kind : {InterfererKind::bpsk, InterfererKind::gmsk}) {
        const auto s = scenario(7, 0.0, kind, 0.0);
        const TrialEngine e(s);
        const auto batch = e.make_batch(3);
        ASSERT_TRUE(batch.waveform.has_value());
        EXPECT_NEAR(batch.waveform->mean_power(), 1.0, 1e-9);
        EXPECT_EQ(batch.waveform->size(), kWaveformSymbolsPerBatch * 128);
        EXPECT_EQ(batch.guard, static_cast<std::size_t>(std::ceil(4.0 * 125000.0 / 600.0)));
    }
    const TrialEngine awgn(scenario(7, 0.0, InterfererKind::awgn_control, 0.0));
    EXPECT_FALSE(awgn.make_batch(0).waveform.has_value());
}

TEST(CountErrors, MatchesDirectDemodulation) {
    const auto s = scenario(7, 0.0, InterfererKind::bpsk, 9.0);
    const TrialEngine e(s);
    const std::size_t trials = 700;
    const PowerLevel level = power_level(s.cfg, s.signal_power_mw(), s.interference_power_mw());
    const auto counted = count_errors(e, trials, std::span(&level, 1), 2)[0];
    std::size_t direct = 0;
    for (std::size_t b = 0; b < batch_count(trials); ++b) {
        const auto batch = e.make_batch(b);
        for (std::size_t t = b * kTrialsPerBatch; t < std::min(trials, (b + 1) * kTrialsPerBatch); ++t) {
            const auto d = e.draw_trial(t, batch);
            direct += demodulate(combine(d, 128, level.peak, level.interference_amp)) != d.symbol;
        }
    }
    EXPECT_EQ(counted, direct);
}
