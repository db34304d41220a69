// In-memory timetable standing in for the remote railway information
// system. The built-in database covers 100 cities; a handful of routes are
// hand written so that the scripted dialogues find the trains they mention,
// the rest are generated deterministically (per-route jitter comes from a
// portable FNV hash, never from std::hash).
//
// The same data can be exchanged as a plain text file, one train per line:
//
//   id|type|dep_city|arr_city|dep|arr|overnight|dep_station|arr_station|services|extra_fare|fare
//
// with `services` a comma list of restaurant, sleeping-car, reservation
// (or "-"), and `#` starting a comment line.

#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dialeval/rng.hpp"
#include "dialeval/types.hpp"

namespace dialeval::sim {

struct TrainRecord {
  std::string id;
  std::string type;  // INTERCITY, EXPRESS, DIRETTO, REGIONALE
  std::string dep_city;
  std::string arr_city;
  std::string dep_station;
  std::string arr_station;
  int dep_minute = 0;
  int arr_minute = 0;
  bool overnight = false;  // arrives the next day
  bool sleeping_car = false;
  bool restaurant = false;
  bool reservation = false;
  bool extra_fare = false;
  int fare_eur = 0;

  bool operator==(const TrainRecord&) const = default;
};

class TimetableDB {
 public:
  void add(TrainRecord train) {
    cities_.insert(train.dep_city);
    cities_.insert(train.arr_city);
    auto& list = routes_[{train.dep_city, train.arr_city}];
    list.push_back(std::move(train));
    std::sort(list.begin(), list.end(),
              [](const TrainRecord& a, const TrainRecord& b) {
                return a.dep_minute < b.dep_minute;
              });
  }

  void add_city(std::string city) { cities_.insert(std::move(city)); }

  const std::set<std::string>& cities() const { return cities_; }

  bool has_route(const std::string& dep, const std::string& arr) const {
    return routes_.count({dep, arr}) > 0;
  }

  std::vector<std::pair<std::string, std::string>> routes() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(routes_.size());
    for (const auto& [key, trains] : routes_) out.push_back(key);
    return out;
  }

  // Trains on the route departing within the window, sorted by departure
  // time. Throws UnknownRouteError when the city pair is not served; this
  // is the information-unavailable path, not a programming error.
  std::vector<TrainRecord> lookup_trains(const std::string& dep,
                                         const std::string& arr,
                                         const TimeWindow& window) const {
    auto it = routes_.find({dep, arr});
    if (it == routes_.end())
      throw UnknownRouteError("no route from " + dep + " to " + arr);
    std::vector<TrainRecord> out;
    for (const auto& t : it->second)
      if (window.contains(t.dep_minute)) out.push_back(t);
    return out;
  }

  bool operator==(const TimetableDB&) const = default;

  static TimetableDB builtin();

  static TimetableDB load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
      throw Error("cannot open timetable file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
  }

  void save_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
      throw Error("cannot write timetable file '" + path.string() + "'");
    out << to_string();
  }

  std::string to_string() const {
    std::ostringstream out;
    out << "# id|type|dep_city|arr_city|dep|arr|overnight|dep_station|"
           "arr_station|services|extra_fare|fare\n";
    for (const auto& [key, trains] : routes_) {
      for (const auto& t : trains) {
        std::string services;
        if (t.restaurant) services += "restaurant,";
        if (t.sleeping_car) services += "sleeping-car,";
        if (t.reservation) services += "reservation,";
        if (services.empty())
          services = "-";
        else
          services.pop_back();
        out << t.id << '|' << t.type << '|' << t.dep_city << '|' << t.arr_city
            << '|' << format_minute(t.dep_minute) << '|'
            << format_minute(t.arr_minute) << '|' << (t.overnight ? 1 : 0)
            << '|' << t.dep_station << '|' << t.arr_station << '|' << services
            << '|' << (t.extra_fare ? 1 : 0) << '|' << t.fare_eur << '\n';
      }
    }
    return out.str();
  }

  static TimetableDB from_string(const std::string& text) {
    TimetableDB db;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> fields;
      std::string field;
      std::istringstream ls(line);
      while (std::getline(ls, field, '|')) fields.push_back(field);
      if (fields.size() != 12)
        throw ParseError("expected 12 pipe-separated fields, got " +
                             std::to_string(fields.size()),
                         line_no);
      TrainRecord t;
      t.id = fields[0];
      t.type = fields[1];
      t.dep_city = fields[2];
      t.arr_city = fields[3];
      t.dep_minute = parse_minute(fields[4]);
      t.arr_minute = parse_minute(fields[5]);
      t.overnight = fields[6] == "1";
      t.dep_station = fields[7];
      t.arr_station = fields[8];
      if (fields[9] != "-") {
        std::istringstream ss(fields[9]);
        std::string service;
        while (std::getline(ss, service, ',')) {
          if (service == "restaurant")
            t.restaurant = true;
          else if (service == "sleeping-car")
            t.sleeping_car = true;
          else if (service == "reservation")
            t.reservation = true;
          else
            throw ParseError("unknown service '" + service + "'", line_no);
        }
      }
      t.extra_fare = fields[10] == "1";
      t.fare_eur = std::stoi(fields[11]);
      db.add(std::move(t));
    }
    return db;
  }

 private:
  std::map<std::pair<std::string, std::string>, std::vector<TrainRecord>>
      routes_;
  std::set<std::string> cities_;
};

namespace timetable_detail {

inline const std::vector<std::string>& city_list() {
  static const std::vector<std::string> cities = {
      "ROMA",       "MILANO",     "NAPOLI",    "TORINO",    "PALERMO",
      "GENOVA",     "BOLOGNA",    "FIRENZE",   "BARI",      "CATANIA",
      "VENEZIA",    "VERONA",     "MESSINA",   "PADOVA",    "TRIESTE",
      "TARANTO",    "BRESCIA",    "PRATO",     "PARMA",     "MODENA",
      "REGGIO_EMILIA", "PERUGIA", "LIVORNO",   "RAVENNA",   "CAGLIARI",
      "FOGGIA",     "RIMINI",     "SALERNO",   "FERRARA",   "SASSARI",
      "LATINA",     "MONZA",      "SIRACUSA",  "PESCARA",   "BERGAMO",
      "TRENTO",     "FORLI",      "VICENZA",   "TERNI",     "BOLZANO",
      "NOVARA",     "PIACENZA",   "ANCONA",    "ANDRIA",    "AREZZO",
      "UDINE",      "CESENA",     "LECCE",     "PESARO",    "BARLETTA",
      "ALESSANDRIA", "CATANZARO", "PISTOIA",   "BRINDISI",  "PISA",
      "COMO",       "LUCCA",      "GROSSETO",  "TREVISO",   "COSENZA",
      "VARESE",     "ASTI",       "CASERTA",   "RAGUSA",    "GELA",
      "CREMONA",    "CARPI",      "ALTAMURA",  "IMOLA",     "MASSA",
      "TRAPANI",    "VITERBO",    "MATERA",    "SAVONA",    "BENEVENTO",
      "CROTONE",    "POTENZA",    "AVELLINO",  "MERANO",    "MARSALA",
      "AGRIGENTO",  "FAENZA",     "SANREMO",   "IVREA",     "AOSTA",
      "SONDRIO",    "BELLUNO",    "ROVIGO",    "MANTOVA",   "PAVIA",
      "LODI",       "LECCO",      "VERCELLI",  "BIELLA",    "CUNEO",
      "CHIETI",     "TERAMO",     "CAMPOBASSO", "ISERNIA",  "ENNA",
  };
  return cities;
}

inline std::string default_station(const std::string& city) {
  std::string lower;
  for (char c : city) lower += (c == '_') ? ' ' : static_cast<char>(std::tolower(c));
  return lower + " centrale";
}

// Generated routes get six departures spread so that every strategy window
// (morning, afternoon, evening) contains at least one train.
inline void add_generated_route(TimetableDB& db, const std::string& dep,
                                const std::string& arr, int& train_counter) {
  static constexpr int kBaseMinutes[6] = {430, 510, 760, 845, 1105, 1210};
  static constexpr const char* kTypes[6] = {"REGIONALE", "INTERCITY",
                                            "DIRETTO",   "INTERCITY",
                                            "EXPRESS",   "INTERCITY"};
  const std::uint64_t h = fnv1a(dep + "|" + arr);
  const int jitter = static_cast<int>(h % 20);
  const int duration = 65 + static_cast<int>((h >> 8) % 110);
  for (int k = 0; k < 6; ++k) {
    TrainRecord t;
    t.type = kTypes[k];
    t.id = std::string(1, t.type[0]) + std::to_string(1000 + train_counter++);
    t.dep_city = dep;
    t.arr_city = arr;
    t.dep_station = default_station(dep);
    t.arr_station = default_station(arr);
    t.dep_minute = kBaseMinutes[k] + jitter;
    int arrival = t.dep_minute + duration + 5 * k;
    t.overnight = arrival >= 24 * 60;
    t.arr_minute = arrival % (24 * 60);
    if (t.type == "INTERCITY") {
      t.restaurant = true;
      t.reservation = true;
      t.extra_fare = true;
    } else if (t.type == "EXPRESS") {
      t.restaurant = (h & 1) != 0;
      t.extra_fare = true;
      t.sleeping_car = k == 4 && (h & 2) != 0;
    }
    t.fare_eur = 8 + duration / 10 + (t.extra_fare ? 9 : 0);
    db.add(std::move(t));
  }
}

inline void add_handwritten_routes(TimetableDB& db) {
  auto mk = [](std::string id, std::string type, std::string dep,
               std::string arr, const char* dt, const char* at, bool overnight,
               std::string dst, std::string ast, bool sleep, bool rest,
               bool resv, bool extra, int fare) {
    TrainRecord t;
    t.id = std::move(id);
    t.type = std::move(type);
    t.dep_city = std::move(dep);
    t.arr_city = std::move(arr);
    t.dep_minute = parse_minute(dt);
    t.arr_minute = parse_minute(at);
    t.overnight = overnight;
    t.dep_station = std::move(dst);
    t.arr_station = std::move(ast);
    t.sleeping_car = sleep;
    t.restaurant = rest;
    t.reservation = resv;
    t.extra_fare = extra;
    t.fare_eur = fare;
    return t;
  };

  const std::string tpn = "torino porta nuova";
  const std::string mic = "milano centrale";
  const std::string rot = "roma termini";

  // Torino <-> Milano; the 19:10 -> 20:55 evening train is the one the
  // scripted D1 dialogue answers with.
  db.add(mk("R612", "REGIONALE", "TORINO", "MILANO", "06:50", "08:35", false,
            tpn, mic, false, false, false, false, 14));
  db.add(mk("IC611", "INTERCITY", "TORINO", "MILANO", "08:20", "09:45", false,
            tpn, mic, false, true, true, true, 24));
  db.add(mk("D613", "DIRETTO", "TORINO", "MILANO", "12:15", "14:00", false,
            tpn, mic, false, false, false, false, 15));
  db.add(mk("IC615", "INTERCITY", "TORINO", "MILANO", "13:40", "15:05", false,
            tpn, mic, false, true, true, true, 24));
  db.add(mk("E617", "EXPRESS", "TORINO", "MILANO", "17:55", "19:30", false,
            tpn, mic, false, true, false, true, 20));
  db.add(mk("IC651", "INTERCITY", "TORINO", "MILANO", "19:10", "20:55", false,
            tpn, mic, false, true, true, true, 24));
  db.add(mk("R618", "REGIONALE", "TORINO", "MILANO", "20:40", "22:30", false,
            tpn, mic, false, false, false, false, 14));

  db.add(mk("R622", "REGIONALE", "MILANO", "TORINO", "07:05", "08:50", false,
            mic, tpn, false, false, false, false, 14));
  db.add(mk("IC621", "INTERCITY", "MILANO", "TORINO", "08:45", "10:10", false,
            mic, tpn, false, true, true, true, 24));
  db.add(mk("D623", "DIRETTO", "MILANO", "TORINO", "12:50", "14:35", false,
            mic, tpn, false, false, false, false, 15));
  db.add(mk("IC625", "INTERCITY", "MILANO", "TORINO", "18:35", "20:00", false,
            mic, tpn, false, true, true, true, 24));
  db.add(mk("R628", "REGIONALE", "MILANO", "TORINO", "20:55", "22:40", false,
            mic, tpn, false, false, false, false, 14));

  // Milano <-> Roma; Intercity 243 at 20:20 is the overnight train the
  // scripted D2 dialogue answers with, so it must be the first evening
  // departure on the route.
  db.add(mk("IC241", "INTERCITY", "MILANO", "ROMA", "07:15", "11:40", false,
            mic, rot, false, true, true, true, 42));
  db.add(mk("E245", "EXPRESS", "MILANO", "ROMA", "09:05", "14:10", false, mic,
            rot, false, true, false, true, 35));
  db.add(mk("D247", "DIRETTO", "MILANO", "ROMA", "12:30", "18:15", false, mic,
            rot, false, false, false, false, 28));
  db.add(mk("E249", "EXPRESS", "MILANO", "ROMA", "16:45", "22:00", false, mic,
            rot, false, true, false, true, 35));
  db.add(mk("243", "INTERCITY", "MILANO", "ROMA", "20:20", "06:00", true, mic,
            rot, true, true, true, true, 52));

  db.add(mk("IC242", "INTERCITY", "ROMA", "MILANO", "07:40", "12:05", false,
            rot, mic, false, true, true, true, 42));
  db.add(mk("D244", "DIRETTO", "ROMA", "MILANO", "13:20", "19:10", false, rot,
            mic, false, false, false, false, 28));
  db.add(mk("IC246", "INTERCITY", "ROMA", "MILANO", "19:35", "23:55", false,
            rot, mic, false, true, true, true, 42));
  db.add(mk("E248", "EXPRESS", "ROMA", "MILANO", "23:10", "07:05", true, rot,
            mic, true, false, true, true, 47));
}

}  // namespace timetable_detail

inline TimetableDB TimetableDB::builtin() {
  using namespace timetable_detail;
  TimetableDB db;
  const auto& cities = city_list();
  for (const auto& c : cities) db.add_city(c);
  add_handwritten_routes(db);

  int counter = 0;
  // Ring over the full city list keeps every city connected.
  for (std::size_t i = 0; i < cities.size(); ++i) {
    const std::string& a = cities[i];
    const std::string& b = cities[(i + 1) % cities.size()];
    if (!db.has_route(a, b)) add_generated_route(db, a, b, counter);
    if (!db.has_route(b, a)) add_generated_route(db, b, a, counter);
  }
  // Spokes between the major cities used by the bundled scenarios.
  static constexpr const char* kSpokes[][2] = {
      {"TORINO", "GENOVA"},  {"MILANO", "VENEZIA"}, {"ROMA", "NAPOLI"},
      {"BOLOGNA", "FIRENZE"}, {"MILANO", "BOLOGNA"}, {"ROMA", "FIRENZE"},
      {"TORINO", "ROMA"},     {"VERONA", "VENEZIA"}, {"MILANO", "GENOVA"},
      {"NAPOLI", "BARI"},
  };
  for (const auto& pair : kSpokes) {
    if (!db.has_route(pair[0], pair[1]))
      add_generated_route(db, pair[0], pair[1], counter);
    if (!db.has_route(pair[1], pair[0]))
      add_generated_route(db, pair[1], pair[0], counter);
  }
  return db;
}

}  // namespace dialeval::sim
