#pragma once

// Prompt texts. Placeholders use fmt syntax. Changing any text here changes
// request hashes, so recorded transcripts stop replaying.

namespace d2d::templates {

inline constexpr const char* kVersion = "1";

inline constexpr const char* kClassicScenario =
    "You are a daily commuter in a transportation network. Each day, you may choose from {n} "
    "available routes (indexed by 1, ..., {n}) as your commuting option. The travel time on each "
    "route increases as more commuters use it. However, you do not know how others explore the "
    "different routes.";

inline constexpr const char* kTollingScenarioHead =
    "You are a daily commuter in a transportation network. You have a monthly salary of 25,000 "
    "HKD (the average income level in your area is about 20,000 HKD). You rent an apartment with "
    "a monthly rent of 9,000 HKD, and your monthly spending on food is approximately 5,000 HKD. "
    "Each morning, you may choose from these {n} available routes (indexed by 1, ..., {n}) as your "
    "commuting option:";
inline constexpr const char* kTollFreeRoute = "- Route {k} is toll-free.";
inline constexpr const char* kFirstTolledRoute = "- Route {k} is a tolled route costing {toll} HKD per trip.";
inline constexpr const char* kNextTolledRoute = "- Route {k} is also tolled at {toll} HKD per trip.";
inline constexpr const char* kTollingScenarioTail =
    "The travel time on each route increases as more commuters use it. However, you do not know "
    "how others explore the different routes.";

inline constexpr const char* kMultimodalHead =
    "You are a daily commuter living in a suburban area near Chicago, and you need to travel to "
    "Downtown Chicago for work.";
inline constexpr const char* kHighIncome =
    "You own a private car valued at $30,000 and a house valued at $300,000, with a monthly "
    "mortgage payment of about $2,000. Your monthly salary is $12,000, higher than the average "
    "income in your area (about $7,500).";
inline constexpr const char* kMiddleIncome =
    "You own a private car valued at $20,000 and a conda valued at $100,000, with a monthly "
    "mortgage payment of about $1000. Your monthly salary is $7,500, on par with the average "
    "income level in your area (about $7,500).";
inline constexpr const char* kLowIncome =
    "You own a private car valued at $10,000 and rent an apartment with a monthly rent of $800. "
    "Your monthly salary is $3,000, lower than the average income in your area (about $7,500).";
inline constexpr const char* kMultimodalOptions =
    "Each working day, you can commute between home and work using one of the following three "
    "options.\n"
    "- Option 1 (public transit). There is no direct transit connection between your home and "
    "workplace. Your commute begins with an uncovered 0.8-mile walk to the bus station, which can "
    "be uncomfortable in extreme weather. After the bus ride to the metro station, you must "
    "transfer to another metro line to complete your journey. The ticket prices for bus and "
    "transit are $3 and $5 per trip, respectively.\n"
    "- Option 2 (driving). You can drive directly between home and work. The route to work begins "
    "with local city roads, which are slower but less congested, followed by a highway segment "
    "that can become crowded near downtown during the morning/evening peak. There is an "
    "underground parking lot at your workplace ($40 each day).\n"
    "- Option 3 (park-and-ride). You can also drive to a metro station located outside the "
    "downtown area, where congestion is light. A parking lot near the station is available at a "
    "much lower fee, $25 per day, compared with downtown parking. From there, you can then take a "
    "direct metro line (without transfer) to work ($4 per trip).";

inline constexpr const char* kStrategy =
    "Your goal is to explore all available commuting options and eventually settle on one or more "
    "preferred choices. To do so, you will maintain a mixed strategy over these options and update "
    "it progressively according to your daily travel experience.";

inline constexpr const char* kBoundedRationality =
    "- You should behave like a human being with bounded rationality: make decisions through a "
    "combination of subjective perception, psychological intuition, and a moderate degree of "
    "rational analysis, rather than purely logical computation or strict comparisons.";
inline constexpr const char* kMultiFactor =
    "- Your decision should be based on your own needs and preferences, considering multiple "
    "factors, including but not limited to the time and monetary cost, the comfort and fatigue of "
    "each mode, and any inconvenience involved in transfers.";

// Guided RL. {extra} is empty or newline-prefixed items.
inline constexpr const char* kRequirementGuided =
    "Each day, you will complete two tasks based on your current strategy and recent travel "
    "experiences:\n"
    "- Task 1: \"Select the commuting options you would like to use more often.\"\n"
    "- Task 2: \"Indicate how you will update your mixed strategy to reinforce the use of these "
    "options.\"\n"
    "For Task 1, your answer must follow these requirements:\n"
    "- Think step by step, starting by reflecting on your current strategy and the recent travel "
    "experiences.\n"
    "- Provide a thorough but concise analysis, and present the final result only after that.\n"
    "- You must not increase the probability of all options simultaneously.\n"
    "- If you decide not to reinforce any options, output: <result> Options selected for "
    "increase: None. </result>; otherwise, output: <result> Options selected for increase: [xx, "
    "xx, ...]. </result>.{extra}\n"
    "For Task 2, your response must follow these requirements:\n"
    "- Output in the format: <result> Updated strategy: [xx, xx, ...]. </result>.";

inline constexpr const char* kRequirementBaseline =
    "Each day, you will be asked to revise your strategy by reflecting on your current strategy "
    "and your travel experiences in recent days. Your answer must follow the following "
    "requirements:\n"
    "- Think step by step, starting by reflecting your current strategy and the recent travel "
    "experiences.\n"
    "- Provide a thorough but concise analysis, and present the final result only after that.\n"
    "- Output: <result> Updated strategy: [xx, xx, ...]. </result>.{extra}";

inline constexpr const char* kRequirementRl =
    "Each day, you will complete two tasks based on your current strategy and recent travel "
    "experiences:\n"
    "- Task 1: Select the commuting options you would like to use more often.\n"
    "- Task 2: Indicate how you will update your mixed strategy to reinforce the use of these "
    "options.\n"
    "For Task 1, your answer must follow these requirements:\n"
    "- Think step by step, starting by reflecting on your current strategy and the recent travel "
    "experiences.\n"
    "- Provide a thorough but concise analysis, and present the final result only after that.\n"
    "- You must not increase the probability of all options simultaneously.\n"
    "- If you decide not to reinforce any options, output: <result> None. </result>.\n"
    "- Otherwise, output: <result> Options selected for increase: [xx, xx, ...]. </result>.{extra}\n"
    "For Task 2, your answer must follow these requirements:\n"
    "- Think step by step.\n"
    "- Provide a thorough but concise analysis, and present the final result only after that.\n"
    "- Output: <result> Updated strategy: [xx, xx, ...]. </result>.";

inline constexpr const char* kInitialExternal = "Suppose that your initial mixed strategy is {p}.";
inline constexpr const char* kInitialSelf =
    "Based on your prior information about all commuting options, please think first, then "
    "provide the initial mixed strategy for exploration.";
inline constexpr const char* kPositive =
    "Please reflect on your current strategy and your travel experiences in recent days, and then "
    "select a subset of the commuting options for which you would like to increase the selection "
    "probability for the next day.";
inline constexpr const char* kRevise =
    "Please indicate how you will update your strategy to reinforce the use of these options.";
inline constexpr const char* kBaseline =
    "Please revise your strategy by reflecting on your current strategy and your travel "
    "experiences in recent days.";
inline constexpr const char* kConfirmation =
    "I would like to update my mixed strategy to {p} for tomorrow's use.";

inline constexpr const char* kClassicFeedback =
    "Today, the travel times of the {n} routes are realized as follows: {costs}.";

inline constexpr const char* kMultimodalFeedback =
    "Today, the traveler's experiences of choosing the three commuting options are realized as "
    "follows.\n"
    "- Option 1 (transit). The commute to work begins with an exposed 10-minute walk (0.8 miles) "
    "to the bus stop, followed by a 3-minute wait and a 10-minute bus ride, with {bus}. The "
    "transfer to the metro takes about 5 minutes in total, including walking and waiting for the "
    "next train. The metro journey consists of 13 minutes on the first line and another 10 minutes "
    "on the second line, with a 4-minute transfer between them. The first train has {line1}, while "
    "the second has {line2}. Finally, there is a 3-minute walk from the final station to the "
    "workplace. The total monetary cost for the trip is ${transit_money}. The return trip home is "
    "similar in experience.\n"
    "- Option 2 (driving). Driving to work takes approximately {drive_total} minutes in total, "
    "including {highway} minutes on the highway, where the ratio of experienced travel time to "
    "free-flow time is {ratio}. Upon arrival, a 3-minute walk from the parking lot to the "
    "workplace is required. Parking for the entire day costs ${parking}. The return driving time "
    "is similar, and the total fuel cost for the day is about ${fuel}.\n"
    "- Option 3 (park-and-ride). The drive from home to the metro station takes {pnr_drive} "
    "minutes, with a parking fee of ${pnr_parking} for the day. It then takes about 3 minutes to "
    "walk to the station and wait for the next train. The metro ride to the workplace takes 10 "
    "minutes and has {pnr_line}. Upon arrival, walking from the station to the workplace takes 3 "
    "minutes. The return trip home involves comparable driving and transit times. The total fuel "
    "cost for the day is about ${pnr_fuel}, and the round-trip transit fare is ${pnr_fare}.";

inline constexpr const char* kCrowdingFree = "seats available for everyone";
inline constexpr const char* kCrowdingSome = "all seats taken, some passengers standing";
inline constexpr const char* kCrowdingHeavy = "heavily crowded, most passengers standing";
inline constexpr const char* kCrowdingShares = "{bucket} ({seated}% of passengers seated, {standing}% standing)";

inline constexpr const char* kCorrective =
    "Your previous reply could not be used: {diag}. Please answer again and finish with the "
    "result in exactly this format: {format}";
inline constexpr const char* kFormatReinforced =
    "<result> Options selected for increase: [xx, xx, ...]. </result> or <result> Options "
    "selected for increase: None. </result>, using option numbers from 1 to {n}.";
inline constexpr const char* kFormatStrategy =
    "<result> Updated strategy: [xx, xx, ...]. </result> with {n} non-negative probabilities "
    "summing to 1.";
inline constexpr const char* kFormatInitial =
    "<result> Initial strategy: [xx, xx, ...]. </result> with {n} non-negative probabilities "
    "summing to 1.";

}  // namespace d2d::templates
