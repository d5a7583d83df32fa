#pragma once

#include <array>

// Reference operating point of the 820 nm + 1520 nm -> 533 nm PPMgSLT detector.
namespace ucspd::reference {

inline constexpr double kPumpFwhmFs = 200.0;
inline constexpr double kSignalFwhmFs = 240.0;
inline constexpr double kTauGFsPerMm = 204.3;
inline constexpr double kRepRateHz = 76.3e6;
inline constexpr double kPumpPowerMw = 300.0;
inline constexpr double kMeanPhotonsPerPulse = 0.1;
inline constexpr double kTimeBinSpacingFs = 800.0;

inline constexpr double kApdEfficiency = 0.41;
inline constexpr double kFiberCoupling = 0.85;
inline constexpr double kFilterTransmittance = 0.94;
inline constexpr double kDarkCountCeilingCps = 100.0;

inline constexpr double kPoledPeriodUm = 8.55;
inline constexpr double kCrystalTemperatureC = 85.0;

// Measured visibility of the center time-bin (phi' = 0).
inline constexpr double kVisibility = 0.982;

struct CrystalRow {
  double length_mm;
  double resolution_fs;        // measured temporal resolution
  double internal_efficiency;  // at 300 mW pump
  double noise_cps;            // at 300 mW pump
  double detection_limit;      // photons / pulse at 300 mW pump
};

inline constexpr std::array<CrystalRow, 3> kCrystals{{
    {1.0, 255.0, 0.061, 1910.0, 8.6e-5},
    {2.0, 415.0, 0.101, 800.0, 3.3e-5},
    {3.0, 591.0, 0.102, 700.0, 3.1e-5},
}};

}  // namespace ucspd::reference
