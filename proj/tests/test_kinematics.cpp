#include <cmath>

#include <gtest/gtest.h>

#include "egcs/kinematics.hpp"

using namespace egcs;

namespace {

// Rest-to-rest time for a trapezoid/triangle profile, written out directly.
double closed_form_time(double d, double a, double vmax) {
  if (d <= vmax * vmax / a) return 2.0 * std::sqrt(d / a);
  return d / vmax + vmax / a;
}

}  // namespace

TEST(Kinematics, StepsForRoundsUpToWholeInfraSteps) {
  EXPECT_EQ(steps_for(0.0), 0);
  EXPECT_EQ(steps_for(0.1), 1);
  EXPECT_EQ(steps_for(0.11), 2);
  EXPECT_EQ(steps_for(5.0), 50);
  EXPECT_EQ(steps_for(9.1), 91);
}

TEST(Kinematics, RestToRestMatchesClosedForm) {
  for (int floors = 1; floors <= 15; ++floors) {
    const double d = floors * 3.3;
    const auto p = plan_trip(0.0, d, 1.0, 2.5);
    EXPECT_NEAR(p.duration(), closed_form_time(d, 1.0, 2.5), 1e-12) << floors;
    EXPECT_EQ(p.steps, steps_for(closed_form_time(d, 1.0, 2.5)));
    EXPECT_NEAR(p.at(p.duration()).offset, d, 1e-12);
  }
}

TEST(Kinematics, OneFloorHopIsTriangular) {
  const auto p = plan_trip(0.0, 3.3, 1.0, 2.5);
  EXPECT_DOUBLE_EQ(p.t_cruise, 0.0);
  EXPECT_NEAR(p.vpeak, std::sqrt(3.3), 1e-12);
  EXPECT_LT(p.vpeak, 2.5);
}

TEST(Kinematics, ProfileRespectsSpeedBoundAndIsMonotone) {
  for (double v0 : {0.0, 0.7, 2.5}) {
    for (double d : {0.5, 3.3, 20.0, 49.5}) {
      const auto p = plan_trip(v0, d, 1.0, 2.5);
      double last = 0.0;
      for (double t = 0.0; t <= p.duration() + 0.2; t += 0.05) {
        const auto m = p.at(t);
        EXPECT_LE(m.speed, 2.5 + 1e-12);
        EXPECT_GE(m.speed, 0.0);
        EXPECT_GE(m.offset, last - 1e-12);
        EXPECT_LE(m.offset, d + 1e-12);
        last = m.offset;
      }
    }
  }
}

TEST(Kinematics, StopInsideBrakingDistanceBrakesHarder) {
  const double brake = 2.5 * 2.5 / 2.0;
  const auto p = plan_trip(2.5, brake - 0.1, 1.0, 2.5);
  EXPECT_GT(p.decel, 1.0);
  EXPECT_NEAR(p.at(p.duration()).offset, brake - 0.1, 1e-12);
}

TEST(Kinematics, MovingStartReachesTarget) {
  const auto p = plan_trip(1.5, 12.0, 1.0, 2.5);
  EXPECT_NEAR(p.at(0.0).speed, 1.5, 1e-12);
  EXPECT_NEAR(p.at(p.duration()).offset, 12.0, 1e-12);
  EXPECT_NEAR(p.at(p.duration()).speed, 0.0, 1e-12);
}
