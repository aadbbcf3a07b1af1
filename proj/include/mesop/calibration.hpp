#pragma once

#include <cstdint>

#include "mesop/interactions.hpp"

// Repo constants frozen from pilot runs. docs/calibration.md records the runs
// that produced them.

namespace mesop::calibration {

// classifier decision table
inline constexpr double kGasMinKineticEnergy = 1.0;
inline constexpr double kGasMaxClusterFraction = 0.25;
inline constexpr double kTurbulentShearGrowth = 5.0;
inline constexpr double kSettledMaxKineticEnergy = 0.5;
inline constexpr double kGranularMinRepose = 15.0;
inline constexpr double kGranularMinStressCv = 0.2;
inline constexpr double kFluidMaxRepose = 15.0;
inline constexpr double kFluidMaxSpread = 0.2;
inline constexpr double kPasteMinClusterFraction = 0.9;
inline constexpr double kPasteMinMoundIndex = 2.0;

inline constexpr double kSpreadBinWidth = 1.0;

namespace presets {

inline constexpr std::uint64_t kDuration = 10000;
inline constexpr double kGravity = 10.0;
inline constexpr double kContactRadiusFactor = 1.05;

// pour setup
inline constexpr double kGroundHalfWidth = 45.0;
inline constexpr double kGroundSpacing = 0.5;
inline constexpr double kWallHeight = 10.0;
inline constexpr double kGroundDepth3d = 16.0;
inline constexpr std::uint32_t kColumnWidth = 10;
inline constexpr std::uint32_t kColumnHeight = 30;
inline constexpr std::uint32_t kColumnWidth3d = 6;
inline constexpr std::uint32_t kColumnHeight3d = 28;
inline constexpr double kColumnSpacing = 1.15;
inline constexpr double kColumnJitter = 0.05;
inline constexpr double kColumnBase = 2.0;

// granular pile: grain-grain IP1, no pair dissipation
inline constexpr MaterialLaw kPileGrain{5000.0, 0.0, 1.0, 1.0, 0.85};
inline constexpr MaterialLaw kPileGround{5000.0, 0.0, 0.5, 0.5, 0.5};
inline constexpr double kPileAmbient = 1.0;
inline constexpr MaterialLaw kMoistGrain{5000.0, 5.0, 1.0, 1.0, 0.85};

// IP3 / IP5 family
inline constexpr MaterialLaw kIp3Ground{5000.0, 0.0, 0.5, 0.5, 0.5};
inline constexpr double kIp3Ambient = 1.0;
inline constexpr MaterialLaw kIp3GranularGrain{2000.0, 5.0, 1.0, 1.0, 0.9};
inline constexpr MaterialLaw kPasteGrain{2000.0, 5.0, 1.0, 4.0, 0.9};
// fluid_spread runs with weak ambient drag so the sheet can run out flat
inline constexpr MaterialLaw kFluidGrain{80.0, 5.0, 1.0, 1.0, 0.95};
inline constexpr double kFluidAmbient = 0.1;

// jets
inline constexpr double kJetOffset = 15.0;
inline constexpr double kJetWidth = 3.0;
inline constexpr std::uint32_t kJetLanes = 4;
inline constexpr double kJetJitter = 0.05;
inline constexpr double kJetVelocityJitter = 0.02;
inline constexpr double kGasK = 2000.0;
inline constexpr double kGasJetSpeed = 8.0;
inline constexpr double kGasJetRate = 32.0;
inline constexpr std::uint64_t kGasJetCount = 150;

inline constexpr MaterialLaw kKhFluid{0.0, 10.0, 1.5, 1.5, 1.0};
inline constexpr double kKhLayerGap = 3.0;
inline constexpr double kKhJetSpeed = 5.0;
inline constexpr double kKhJetRate = 20.0;

inline constexpr MaterialLaw kVkFluid{200.0, 20.0, 1.5, 1.0, 1.5};
inline constexpr MaterialLaw kVkObstacle{2000.0, 0.0, 1.0, 1.0, 1.0};
inline constexpr double kVkJetSpeed = 6.0;
inline constexpr double kVkJetRate = 48.0;
inline constexpr double kVkJetWidth = 8.0;
inline constexpr std::uint32_t kVkJetLanes = 8;
inline constexpr double kVkObstacleRadius = 2.5;
inline constexpr double kVkObstacleSpacing = 0.5;

}  // namespace presets

}  // namespace mesop::calibration
