#include "sim3align/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>

#include "sim3align/error.hpp"
#include "sim3align/tolerances.hpp"

namespace sim3align::io {

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
    throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

double parse_double(std::string_view token, std::size_t line_no) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        parse_fail(line_no, "expected a number, got '" + std::string(token) + "'");
    }
    return value;
}

long parse_long(std::string_view token, std::size_t line_no) {
    long value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        parse_fail(line_no, "expected an integer, got '" + std::string(token) + "'");
    }
    return value;
}

// getline that tolerates CRLF and reports whether a line was read.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    return true;
}

Sim3Transform pose_from_tokens(const std::vector<std::string_view>& tokens, std::size_t first,
                               std::size_t line_no) {
    const double tx = parse_double(tokens[first + 0], line_no);
    const double ty = parse_double(tokens[first + 1], line_no);
    const double tz = parse_double(tokens[first + 2], line_no);
    // Disk order is (qx, qy, qz, qw).
    const double qx = parse_double(tokens[first + 3], line_no);
    const double qy = parse_double(tokens[first + 4], line_no);
    const double qz = parse_double(tokens[first + 5], line_no);
    const double qw = parse_double(tokens[first + 6], line_no);
    const double norm = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > tol::kFileQuatNorm) {
        parse_fail(line_no, "quaternion norm " + std::to_string(norm) + " too far from 1");
    }
    if (!std::isfinite(tx) || !std::isfinite(ty) || !std::isfinite(tz)) {
        parse_fail(line_no, "non-finite translation");
    }
    return Sim3Transform(1.0, Rotation3(UnitQuaternion::from_unnormalized(qw, qx, qy, qz)),
                         {tx, ty, tz});
}

void write_pose_fields(const Sim3Transform& pose, std::ostream& out) {
    const Vec3& t = pose.translation();
    const UnitQuaternion& q = pose.rotation().quaternion();
    out << format_double(t.x) << ' ' << format_double(t.y) << ' ' << format_double(t.z) << ' '
        << format_double(q.x()) << ' ' << format_double(q.y()) << ' ' << format_double(q.z())
        << ' ' << format_double(q.w());
}

std::ifstream open_input(const std::string& path, std::ios_base::openmode mode) {
    std::ifstream in(path, mode);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open '" + path + "' for reading");
    }
    return in;
}

std::ofstream open_output(const std::string& path, std::ios_base::openmode mode) {
    std::ofstream out(path, mode);
    if (!out) {
        throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
    }
    return out;
}

void check_write(const std::ostream& out, const std::string& path) {
    if (!out) {
        throw Error(ErrorCode::io, "write to '" + path + "' failed");
    }
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

TrajectoryFile read_trajectory(std::istream& in) {
    TrajectoryFile file;
    std::string line;
    std::size_t line_no = 0;
    double prev_ts = -std::numeric_limits<double>::infinity();
    while (next_line(in, line, line_no)) {
        if (!line.empty() && line[0] == '#') {
            file.comments.push_back(line);
            continue;
        }
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (tokens.size() != 8) {
            parse_fail(line_no, "expected 8 fields (timestamp t q), got " +
                                    std::to_string(tokens.size()));
        }
        const double ts = parse_double(tokens[0], line_no);
        if (!std::isfinite(ts)) parse_fail(line_no, "non-finite timestamp");
        if (!(ts > prev_ts)) {
            parse_fail(line_no, "timestamps must be strictly increasing");
        }
        prev_ts = ts;
        file.poses.push_back({ts, pose_from_tokens(tokens, 1, line_no)});
    }
    if (file.poses.empty()) {
        throw Error(ErrorCode::parse, "trajectory contains no poses");
    }
    return file;
}

TrajectoryFile read_trajectory_file(const std::string& path) {
    auto in = open_input(path, std::ios_base::in);
    try {
        return read_trajectory(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

void write_trajectory(const Trajectory& traj, std::ostream& out,
                      const std::vector<std::string>& comments) {
    out << kFormatHeader << '\n';
    out << "# timestamp tx ty tz qx qy qz qw\n";
    for (const auto& c : comments) out << (c.starts_with('#') ? "" : "# ") << c << '\n';
    for (const TimedPose& tp : traj) {
        out << format_double(tp.timestamp) << ' ';
        write_pose_fields(tp.pose, out);
        out << '\n';
    }
}

void write_trajectory_file(const Trajectory& traj, const std::string& path,
                           const std::vector<std::string>& comments) {
    auto out = open_output(path, std::ios_base::out);
    write_trajectory(traj, out, comments);
    check_write(out, path);
}

KeyFrameFile read_keyframes(std::istream& in) {
    KeyFrameFile file;
    std::string line;
    std::size_t line_no = 0;

    // Intrinsics: first non-comment, non-empty line.
    bool have_intrinsics = false;
    while (!have_intrinsics && next_line(in, line, line_no)) {
        if (!line.empty() && line[0] == '#') continue;
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (tokens.size() != 6) {
            parse_fail(line_no, "intrinsics line needs 6 fields (fx fy cx cy width height)");
        }
        file.intrinsics.fx = parse_double(tokens[0], line_no);
        file.intrinsics.fy = parse_double(tokens[1], line_no);
        file.intrinsics.cx = parse_double(tokens[2], line_no);
        file.intrinsics.cy = parse_double(tokens[3], line_no);
        const long w = parse_long(tokens[4], line_no);
        const long h = parse_long(tokens[5], line_no);
        if (w <= 0 || h <= 0 || w > 1 << 20 || h > 1 << 20) {
            parse_fail(line_no, "image dimensions out of range");
        }
        file.intrinsics.width = static_cast<int>(w);
        file.intrinsics.height = static_cast<int>(h);
        try {
            file.intrinsics.validate();
        } catch (const Error& e) {
            parse_fail(line_no, e.what());
        }
        have_intrinsics = true;
    }
    if (!have_intrinsics) {
        throw Error(ErrorCode::parse, "key-frame file has no intrinsics line");
    }

    double prev_ts = -std::numeric_limits<double>::infinity();
    while (next_line(in, line, line_no)) {
        if (!line.empty() && line[0] == '#') continue;
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (tokens[0] != "KF" || tokens.size() != 11) {
            parse_fail(line_no, "expected 'KF id timestamp t q n_samples'");
        }
        KeyFrame kf;
        kf.id = static_cast<int>(parse_long(tokens[1], line_no));
        kf.timestamp = parse_double(tokens[2], line_no);
        if (!std::isfinite(kf.timestamp) || !(kf.timestamp > prev_ts)) {
            parse_fail(line_no, "key-frame timestamps must be strictly increasing");
        }
        prev_ts = kf.timestamp;
        kf.pose = pose_from_tokens(tokens, 3, line_no);
        const long n_samples = parse_long(tokens[10], line_no);
        if (n_samples < 0) parse_fail(line_no, "negative sample count");

        for (long s = 0; s < n_samples; ++s) {
            if (!next_line(in, line, line_no)) {
                throw Error(ErrorCode::parse,
                            "key-frame " + std::to_string(kf.id) + ": stream ends after " +
                                std::to_string(s) + " of " + std::to_string(n_samples) +
                                " samples");
            }
            const auto st = split_ws(line);
            if (st.size() != 3) {
                parse_fail(line_no, "key-frame " + std::to_string(kf.id) + " sample " +
                                        std::to_string(s) + ": expected 'u v d'");
            }
            DepthSample sample;
            sample.u = static_cast<int>(parse_long(st[0], line_no));
            sample.v = static_cast<int>(parse_long(st[1], line_no));
            sample.d = parse_double(st[2], line_no);
            if (sample.u < 0 || sample.u >= file.intrinsics.width || sample.v < 0 ||
                sample.v >= file.intrinsics.height) {
                parse_fail(line_no, "key-frame " + std::to_string(kf.id) + " sample " +
                                        std::to_string(s) + ": pixel out of bounds");
            }
            if (!(sample.d > 0.0) || !std::isfinite(sample.d)) {
                parse_fail(line_no, "key-frame " + std::to_string(kf.id) + " sample " +
                                        std::to_string(s) + ": depth must be positive");
            }
            kf.samples.push_back(sample);
        }
        file.frames.push_back(std::move(kf));
    }
    return file;
}

KeyFrameFile read_keyframes_file(const std::string& path) {
    auto in = open_input(path, std::ios_base::in);
    try {
        return read_keyframes(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

void write_keyframes(const KeyFrameFile& data, std::ostream& out) {
    out << kFormatHeader << '\n';
    out << "# fx fy cx cy width height\n";
    const CameraIntrinsics& m = data.intrinsics;
    out << format_double(m.fx) << ' ' << format_double(m.fy) << ' ' << format_double(m.cx)
        << ' ' << format_double(m.cy) << ' ' << m.width << ' ' << m.height << '\n';
    for (const KeyFrame& kf : data.frames) {
        out << "KF " << kf.id << ' ' << format_double(kf.timestamp) << ' ';
        write_pose_fields(kf.pose, out);
        out << ' ' << kf.samples.size() << '\n';
        for (const DepthSample& s : kf.samples) {
            out << s.u << ' ' << s.v << ' ' << format_double(s.d) << '\n';
        }
    }
}

void write_keyframes_file(const KeyFrameFile& data, const std::string& path) {
    auto out = open_output(path, std::ios_base::out);
    write_keyframes(data, out);
    check_write(out, path);
}

namespace {

void put_f64_le(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char raw[8];
    for (int i = 0; i < 8; ++i) raw[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(raw, 8);
}

struct PlyProperty {
    std::string name;
    std::string type;
    bool is_list = false;
    std::string list_count_type;
};

std::size_t scalar_size(const std::string& type, std::size_t line_no) {
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
    if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
    if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
        type == "float" || type == "float32")
        return 4;
    if (type == "double" || type == "float64") return 8;
    parse_fail(line_no, "unknown PLY type '" + type + "'");
}

double read_binary_scalar(std::istream& in, const std::string& type) {
    unsigned char raw[8];
    const std::size_t size = scalar_size(type, 0);
    in.read(reinterpret_cast<char*>(raw), static_cast<std::streamsize>(size));
    if (static_cast<std::size_t>(in.gcount()) != size) {
        throw Error(ErrorCode::parse, "PLY payload truncated");
    }
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < size; ++i) bits |= static_cast<std::uint64_t>(raw[i]) << (8 * i);
    if (type == "double" || type == "float64") {
        return std::bit_cast<double>(bits);
    }
    if (type == "float" || type == "float32") {
        return static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(bits)));
    }
    // Integers: sign-extend where needed.
    if (type == "char" || type == "int8") return static_cast<double>(static_cast<std::int8_t>(bits));
    if (type == "short" || type == "int16") return static_cast<double>(static_cast<std::int16_t>(bits));
    if (type == "int" || type == "int32") return static_cast<double>(static_cast<std::int32_t>(bits));
    return static_cast<double>(bits);
}

}  // namespace

void write_ply(const PointCloud& cloud, std::ostream& out, bool binary) {
    out << "ply\n";
    out << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    out << "comment sim3-align v1\n";
    out << "element vertex " << cloud.points.size() << '\n';
    out << "property double x\n";
    out << "property double y\n";
    out << "property double z\n";
    out << "end_header\n";
    if (binary) {
        for (const Vec3& p : cloud.points) {
            put_f64_le(out, p.x);
            put_f64_le(out, p.y);
            put_f64_le(out, p.z);
        }
    } else {
        for (const Vec3& p : cloud.points) {
            out << format_double(p.x) << ' ' << format_double(p.y) << ' '
                << format_double(p.z) << '\n';
        }
    }
}

void write_ply_file(const PointCloud& cloud, const std::string& path, bool binary) {
    auto out = open_output(path, binary ? std::ios_base::out | std::ios_base::binary
                                        : std::ios_base::out);
    write_ply(cloud, out, binary);
    check_write(out, path);
}

PointCloud read_ply(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!next_line(in, line, line_no) || line != "ply") {
        throw Error(ErrorCode::parse, "missing 'ply' magic");
    }

    bool binary = false;
    bool have_format = false;
    struct Element {
        std::string name;
        std::size_t count = 0;
        std::vector<PlyProperty> properties;
    };
    std::vector<Element> elements;

    while (true) {
        if (!next_line(in, line, line_no)) {
            throw Error(ErrorCode::parse, "PLY header ends before end_header");
        }
        const auto tokens = split_ws(line);
        if (tokens.empty() || tokens[0] == "comment" || tokens[0] == "obj_info") continue;
        if (tokens[0] == "end_header") break;
        if (tokens[0] == "format") {
            if (tokens.size() != 3 || tokens[2] != "1.0") {
                parse_fail(line_no, "unsupported PLY format line");
            }
            if (tokens[1] == "ascii") {
                binary = false;
            } else if (tokens[1] == "binary_little_endian") {
                binary = true;
            } else {
                parse_fail(line_no, "unsupported PLY encoding '" + std::string(tokens[1]) + "'");
            }
            have_format = true;
        } else if (tokens[0] == "element") {
            if (tokens.size() != 3) parse_fail(line_no, "malformed element line");
            const long count = parse_long(tokens[2], line_no);
            if (count < 0) parse_fail(line_no, "negative element count");
            elements.push_back({std::string(tokens[1]), static_cast<std::size_t>(count), {}});
        } else if (tokens[0] == "property") {
            if (elements.empty()) parse_fail(line_no, "property before any element");
            PlyProperty prop;
            if (tokens.size() == 3) {
                prop.type = std::string(tokens[1]);
                prop.name = std::string(tokens[2]);
                scalar_size(prop.type, line_no);  // validate
            } else if (tokens.size() == 5 && tokens[1] == "list") {
                prop.is_list = true;
                prop.list_count_type = std::string(tokens[2]);
                prop.type = std::string(tokens[3]);
                prop.name = std::string(tokens[4]);
                scalar_size(prop.list_count_type, line_no);
                scalar_size(prop.type, line_no);
            } else {
                parse_fail(line_no, "malformed property line");
            }
            elements.back().properties.push_back(std::move(prop));
        } else {
            parse_fail(line_no, "unexpected header line '" + std::string(tokens[0]) + "'");
        }
    }
    if (!have_format) {
        throw Error(ErrorCode::parse, "PLY header has no format line");
    }

    PointCloud cloud;
    for (const auto& element : elements) {
        const bool is_vertex = element.name == "vertex";
        int ix = -1, iy = -1, iz = -1;
        if (is_vertex) {
            for (std::size_t p = 0; p < element.properties.size(); ++p) {
                const auto& prop = element.properties[p];
                if (prop.is_list) continue;
                if (prop.name == "x") ix = static_cast<int>(p);
                if (prop.name == "y") iy = static_cast<int>(p);
                if (prop.name == "z") iz = static_cast<int>(p);
            }
            if (ix < 0 || iy < 0 || iz < 0) {
                throw Error(ErrorCode::parse, "vertex element lacks x/y/z properties");
            }
            cloud.points.reserve(std::min<std::size_t>(element.count, 1u << 20));
        }

        for (std::size_t row = 0; row < element.count; ++row) {
            Vec3 p;
            if (binary) {
                for (std::size_t c = 0; c < element.properties.size(); ++c) {
                    const auto& prop = element.properties[c];
                    std::size_t repeat = 1;
                    if (prop.is_list) {
                        const double n = read_binary_scalar(in, prop.list_count_type);
                        if (n < 0 || n > 1e8) {
                            throw Error(ErrorCode::parse, "unreasonable PLY list length");
                        }
                        repeat = static_cast<std::size_t>(n);
                    }
                    double last = 0.0;
                    for (std::size_t r = 0; r < repeat; ++r) {
                        last = read_binary_scalar(in, prop.type);
                    }
                    if (is_vertex && !prop.is_list) {
                        if (static_cast<int>(c) == ix) p.x = last;
                        if (static_cast<int>(c) == iy) p.y = last;
                        if (static_cast<int>(c) == iz) p.z = last;
                    }
                }
            } else {
                if (!next_line(in, line, line_no)) {
                    throw Error(ErrorCode::parse, "PLY payload truncated");
                }
                const auto tokens = split_ws(line);
                std::size_t cursor = 0;
                for (std::size_t c = 0; c < element.properties.size(); ++c) {
                    const auto& prop = element.properties[c];
                    std::size_t repeat = 1;
                    if (prop.is_list) {
                        if (cursor >= tokens.size()) parse_fail(line_no, "short PLY row");
                        const long n = parse_long(tokens[cursor++], line_no);
                        if (n < 0) parse_fail(line_no, "negative list length");
                        repeat = static_cast<std::size_t>(n);
                    }
                    double last = 0.0;
                    for (std::size_t r = 0; r < repeat; ++r) {
                        if (cursor >= tokens.size()) parse_fail(line_no, "short PLY row");
                        last = parse_double(tokens[cursor++], line_no);
                    }
                    if (is_vertex && !prop.is_list) {
                        if (static_cast<int>(c) == ix) p.x = last;
                        if (static_cast<int>(c) == iy) p.y = last;
                        if (static_cast<int>(c) == iz) p.z = last;
                    }
                }
                if (cursor != tokens.size()) parse_fail(line_no, "trailing fields in PLY row");
            }
            if (is_vertex) cloud.points.push_back(p);
        }
    }
    return cloud;
}

PointCloud read_ply_file(const std::string& path) {
    auto in = open_input(path, std::ios_base::in | std::ios_base::binary);
    try {
        return read_ply(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

Sim3Transform read_transform(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool have_scale = false, have_quat = false, have_trans = false;
    double scale = 1.0;
    double qx = 0, qy = 0, qz = 0, qw = 1;
    Vec3 t;
    while (next_line(in, line, line_no)) {
        if (!line.empty() && line[0] == '#') continue;
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (tokens[0] == "scale" && tokens.size() == 2) {
            scale = parse_double(tokens[1], line_no);
            have_scale = true;
        } else if (tokens[0] == "quaternion" && tokens.size() == 5) {
            qx = parse_double(tokens[1], line_no);
            qy = parse_double(tokens[2], line_no);
            qz = parse_double(tokens[3], line_no);
            qw = parse_double(tokens[4], line_no);
            have_quat = true;
        } else if (tokens[0] == "translation" && tokens.size() == 4) {
            t.x = parse_double(tokens[1], line_no);
            t.y = parse_double(tokens[2], line_no);
            t.z = parse_double(tokens[3], line_no);
            have_trans = true;
        } else {
            parse_fail(line_no, "unknown transform field '" + std::string(tokens[0]) + "'");
        }
    }
    if (!have_scale || !have_quat || !have_trans) {
        throw Error(ErrorCode::parse, "transform file needs scale, quaternion and translation");
    }
    const double norm = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > tol::kFileQuatNorm) {
        throw Error(ErrorCode::parse, "transform quaternion is not unit norm");
    }
    if (!std::isfinite(scale) || !(scale > 0.0) || !t.is_finite()) {
        throw Error(ErrorCode::parse, "transform scale/translation out of range");
    }
    return Sim3Transform(scale, Rotation3(UnitQuaternion::from_unnormalized(qw, qx, qy, qz)), t);
}

Sim3Transform read_transform_file(const std::string& path) {
    auto in = open_input(path, std::ios_base::in);
    try {
        return read_transform(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

void write_transform(const Sim3Transform& t, std::ostream& out) {
    const UnitQuaternion& q = t.rotation().quaternion();
    out << kFormatHeader << '\n';
    out << "scale " << format_double(t.scale()) << '\n';
    out << "quaternion " << format_double(q.x()) << ' ' << format_double(q.y()) << ' '
        << format_double(q.z()) << ' ' << format_double(q.w()) << '\n';
    out << "translation " << format_double(t.translation().x) << ' '
        << format_double(t.translation().y) << ' ' << format_double(t.translation().z) << '\n';
}

void write_transform_file(const Sim3Transform& t, const std::string& path) {
    auto out = open_output(path, std::ios_base::out);
    write_transform(t, out);
    check_write(out, path);
}

}  // namespace sim3align::io
