#include "vdse/csv.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vdse {

namespace {

struct Row {
  std::vector<double> fields;
  std::string stream;
};

std::FILE* open_write(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot open for writing: " + path);
  return f;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

double to_double(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw ConfigError("bad numeric CSV field: " + s);
  }
}

}  // namespace

void write_streams_csv(const std::string& path, const SensorStreams& s) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "t,stream,source,f0,f1,f2,f3,f4,f5,f6,f7,f8\n");

  struct Line {
    double t;
    int order;
    std::string text;
  };
  std::vector<Line> lines;
  lines.reserve(s.imu.size() + s.gnss.size() + s.wheels.size() +
                s.actuation.size());
  char buf[512];

  for (const auto& m : s.imu) {
    std::snprintf(buf, sizeof buf,
                  "%.9f,imu,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d,,",
                  m.t, m.source_id, m.omega.x(), m.omega.y(), m.omega.z(),
                  m.accel.x(), m.accel.y(), m.accel.z(), m.valid ? 1 : 0);
    lines.push_back({m.t, 0, buf});
  }
  for (const auto& g : s.gnss) {
    std::snprintf(buf, sizeof buf,
                  "%.9f,gnss,%d,%.12g,%.12g,%.12g,%.12g,%d,%.12g,%.12g,%.12g,"
                  "%d",
                  g.t, g.source_id, g.pos.x(), g.pos.y(), g.pos.z(),
                  g.heading, g.has_heading ? 1 : 0, g.sigma.x(), g.sigma.y(),
                  g.sigma.z(), static_cast<int>(g.rtk_status));
    lines.push_back({g.t, 1, buf});
  }
  for (const auto& w : s.wheels) {
    std::snprintf(buf, sizeof buf, "%.9f,wheels,0,%.12g,%.12g,%.12g,%.12g,,,,,",
                  w.t, w.fl, w.fr, w.rl, w.rr);
    lines.push_back({w.t, 2, buf});
  }
  for (const auto& a : s.actuation) {
    std::snprintf(buf, sizeof buf,
                  "%.9f,actuation,0,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,,,",
                  a.t, a.steer_front, a.brake_fl, a.brake_fr, a.brake_rl,
                  a.brake_rr, a.drive_rear);
    lines.push_back({a.t, 3, buf});
  }

  std::stable_sort(lines.begin(), lines.end(),
                   [](const Line& a, const Line& b) {
                     if (a.t != b.t) return a.t < b.t;
                     return a.order < b.order;
                   });
  for (const auto& l : lines) std::fprintf(f, "%s\n", l.text.c_str());
  std::fclose(f);
}

SensorStreams read_streams_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open streams file: " + path);
  SensorStreams out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() < 4) throw ConfigError("short CSV row: " + line);
    const double t = to_double(cols[0]);
    const std::string& stream = cols[1];
    const int source = static_cast<int>(to_double(cols[2]));
    auto field = [&](std::size_t i) { return to_double(cols.at(3 + i)); };
    if (stream == "imu") {
      ImuSample m;
      m.t = t;
      m.source_id = source;
      m.omega = Vec3(field(0), field(1), field(2));
      m.accel = Vec3(field(3), field(4), field(5));
      m.valid = field(6) != 0.0;
      out.imu.push_back(m);
    } else if (stream == "gnss") {
      GnssFix g;
      g.t = t;
      g.source_id = source;
      g.pos = Vec3(field(0), field(1), field(2));
      g.heading = field(3);
      g.has_heading = field(4) != 0.0;
      g.sigma = Vec3(field(5), field(6), field(7));
      g.rtk_status = static_cast<RtkStatus>(static_cast<int>(field(8)));
      out.gnss.push_back(g);
    } else if (stream == "wheels") {
      WheelSpeeds w;
      w.t = t;
      w.fl = field(0);
      w.fr = field(1);
      w.rl = field(2);
      w.rr = field(3);
      out.wheels.push_back(w);
    } else if (stream == "actuation") {
      ActuationSample a;
      a.t = t;
      a.steer_front = field(0);
      a.brake_fl = field(1);
      a.brake_fr = field(2);
      a.brake_rl = field(3);
      a.brake_rr = field(4);
      a.drive_rear = field(5);
      out.actuation.push_back(a);
    } else {
      throw ConfigError("unknown stream tag: " + stream);
    }
  }
  return out;
}

void write_ground_truth_csv(const std::string& path, const GroundTruth& gt) {
  std::FILE* f = open_write(path);
  std::fprintf(f,
               "t_s,px_m,py_m,pz_m,phi_rad,theta_rad,psi_rad,vx_mps,vy_mps,"
               "vz_mps,beta_rad,ax_mps2,ay_mps2,az_mps2,wx_radps,wy_radps,"
               "wz_radps,wfl_radps,wfr_radps,wrl_radps,wrr_radps,steer_rad,"
               "mb_fl_nm,mb_fr_nm,mb_rl_nm,mb_rr_nm,md_nm\n");
  for (const auto& s : gt.samples) {
    std::fprintf(f,
                 "%.9f,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
                 "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
                 "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                 s.t, s.pos.x(), s.pos.y(), s.pos.z(), s.angles.roll,
                 s.angles.pitch, s.angles.yaw, s.vel.x(), s.vel.y(),
                 s.vel.z(), s.beta, s.accel.x(), s.accel.y(), s.accel.z(),
                 s.omega.x(), s.omega.y(), s.omega.z(), s.wheels.fl,
                 s.wheels.fr, s.wheels.rl, s.wheels.rr, s.act.steer_front,
                 s.act.brake_fl, s.act.brake_fr, s.act.brake_rl,
                 s.act.brake_rr, s.act.drive_rear);
  }
  std::fclose(f);
}

GroundTruth read_ground_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open ground truth file: " + path);
  GroundTruth gt;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() < 27) throw ConfigError("short ground-truth row");
    GroundTruthSample s;
    auto v = [&](std::size_t i) { return to_double(cols[i]); };
    s.t = v(0);
    s.pos = Vec3(v(1), v(2), v(3));
    s.angles = EulerAngles(v(4), v(5), v(6));
    s.vel = Vec3(v(7), v(8), v(9));
    s.beta = v(10);
    s.accel = Vec3(v(11), v(12), v(13));
    s.omega = Vec3(v(14), v(15), v(16));
    s.wheels = {s.t, v(17), v(18), v(19), v(20)};
    s.act.t = s.t;
    s.act.steer_front = v(21);
    s.act.brake_fl = v(22);
    s.act.brake_fr = v(23);
    s.act.brake_rl = v(24);
    s.act.brake_rr = v(25);
    s.act.drive_rear = v(26);
    gt.samples.push_back(s);
  }
  if (gt.samples.size() >= 2)
    gt.dt = gt.samples[1].t - gt.samples[0].t;
  return gt;
}

void write_track_csv(const std::string& path, const TrackModel& track,
                     double ds) {
  std::FILE* f = open_write(path);
  std::fprintf(f,
               "s_m,x_m,y_m,z_m,bank_rad,slope_rad,width_m,x_left_m,y_left_m,"
               "z_left_m,x_right_m,y_right_m,z_right_m\n");
  for (double s = 0.0; s < track.length(); s += ds) {
    const TrackSample smp = track.at(s);
    const Vec3 l = track.left_bound(s);
    const Vec3 r = track.right_bound(s);
    std::fprintf(f,
                 "%.6f,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
                 "%.12g,%.12g,%.12g\n",
                 s, smp.pos.x(), smp.pos.y(), smp.pos.z(), smp.bank,
                 smp.slope, smp.width, l.x(), l.y(), l.z(), r.x(), r.y(),
                 r.z());
  }
  std::fclose(f);
}

void write_trace_csv(const std::string& path,
                     const std::vector<TraceRecord>& trace) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "t,px,py,pz,phi,theta,psi,vx,vy,vz,beta,sigma_flags\n");
  for (const auto& r : trace) {
    std::fprintf(f,
                 "%.9f,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
                 "%.12g,%" PRIu32 "\n",
                 r.t, r.state.pos.x(), r.state.pos.y(), r.state.pos.z(),
                 r.state.angles.roll, r.state.angles.pitch,
                 r.state.angles.yaw, r.state.vel.x(), r.state.vel.y(),
                 r.state.vel.z(), r.beta, r.flags);
  }
  std::fclose(f);
}

std::vector<TraceRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path);
  std::vector<TraceRecord> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() < 12) throw ConfigError("short trace row");
    TraceRecord r;
    auto v = [&](std::size_t i) { return to_double(cols[i]); };
    r.t = v(0);
    r.state.pos = Vec3(v(1), v(2), v(3));
    r.state.angles = EulerAngles(v(4), v(5), v(6));
    r.state.vel = Vec3(v(7), v(8), v(9));
    r.beta = v(10);
    r.flags = static_cast<std::uint32_t>(to_double(cols[11]));
    out.push_back(r);
  }
  return out;
}

}  // namespace vdse
