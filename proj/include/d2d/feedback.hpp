#pragma once

#include <string>
#include <vector>

namespace d2d {

enum class ScenarioKind { classic, tolling, multimodal };

// Riders on a transit leg against its empty seats at departure.
struct Crowding {
  double riders = 0.0;
  double seats = 1.0;

  double occupancy() const { return riders / seats; }
  double seated_share() const { return riders <= seats ? 1.0 : seats / riders; }
  double standing_share() const { return 1.0 - seated_share(); }
};

struct Segment {
  std::string name;
  double minutes = 0.0;
};

struct MoneyItem {
  std::string name;
  double amount = 0.0;
};

struct OptionExperience {
  double time = 0.0;   // one-way minutes, sum of segments when segments are listed
  double money = 0.0;  // per day
  std::vector<Segment> segments;
  std::vector<MoneyItem> money_items;
  std::vector<Crowding> crowding;  // per transit leg, in travel order
  double highway_ratio = 0.0;      // driving only
};

// One class's experience of every option on one day.
struct FeedbackBundle {
  ScenarioKind kind = ScenarioKind::classic;
  std::vector<OptionExperience> options;
};

}  // namespace d2d
