#include "gridreduce/network_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gridreduce/errors.hpp"

namespace gridreduce {

namespace {

const char* const kBusHeader = "id,voltage_kv,shunt_re,shunt_im,current_re,current_im";
const char* const kLineHeader = "from_id,to_id,adm_re,adm_im";

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct Row {
    std::size_t line;
    std::vector<std::string> fields;
};

// Data rows after the header; blank lines and '#' comments are skipped.
std::vector<Row> rows(const std::string& text, const std::string& name, const std::vector<std::string>& headers) {
    std::vector<Row> out;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(trim(f));
        if (line.back() == ',') fields.emplace_back();
        if (!header_seen) {
            std::string joined;
            for (std::size_t i = 0; i < fields.size(); ++i) joined += (i ? "," : "") + fields[i];
            bool ok = false;
            for (const auto& h : headers) ok = ok || joined == h;
            if (!ok) throw ParseError(name, lineno, 0, "unexpected header '" + line + "', expected '" + headers.front() + "'");
            header_seen = true;
            continue;
        }
        out.push_back({lineno, std::move(fields)});
    }
    if (!header_seen) throw ParseError(name, lineno ? lineno : 1, 0, "missing header");
    return out;
}

double number(const std::string& text, const std::string& name, std::size_t line, const char* column) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw ParseError(name, line, 0, std::string("invalid number '") + text + "' in column " + column);
    }
    return value;
}

BusId bus_id(const std::string& text, const std::string& name, std::size_t line) {
    if (text.empty() || text.find_first_of(" \t") != std::string::npos) {
        throw ParseError(name, line, 0, "invalid bus id '" + text + "'");
    }
    return BusId(text);
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

RawNetwork parse_network(const std::string& buses_text, const std::string& lines_text, const std::string& buses_name,
                         const std::string& lines_name) {
    RawNetwork raw;
    std::set<BusId> ids;
    for (const auto& row : rows(buses_text, buses_name, {kBusHeader})) {
        if (row.fields.size() != 6) throw ParseError(buses_name, row.line, 0, "expected 6 fields");
        Bus bus;
        bus.id = bus_id(row.fields[0], buses_name, row.line);
        bus.nominal_voltage_kv = number(row.fields[1], buses_name, row.line, "voltage_kv");
        bus.shunt = {number(row.fields[2], buses_name, row.line, "shunt_re"),
                     number(row.fields[3], buses_name, row.line, "shunt_im")};
        bus.current = {number(row.fields[4], buses_name, row.line, "current_re"),
                       number(row.fields[5], buses_name, row.line, "current_im")};
        if (!ids.insert(bus.id).second) throw ParseError(buses_name, row.line, 0, "duplicate bus id " + bus.id.str());
        raw.buses.push_back(bus);
    }
    const std::string meta_header = std::string(kLineHeader) + ",meta";
    for (const auto& row : rows(lines_text, lines_name, {kLineHeader, meta_header})) {
        if (row.fields.size() != 4 && row.fields.size() != 5) throw ParseError(lines_name, row.line, 0, "expected 4 or 5 fields");
        Line line;
        line.a = bus_id(row.fields[0], lines_name, row.line);
        line.b = bus_id(row.fields[1], lines_name, row.line);
        for (const auto* id : {&line.a, &line.b}) {
            if (!ids.count(*id)) throw ParseError(lines_name, row.line, 0, "line references unknown bus " + id->str());
        }
        line.admittance = {number(row.fields[2], lines_name, row.line, "adm_re"),
                           number(row.fields[3], lines_name, row.line, "adm_im")};
        if (row.fields.size() == 5) {
            const auto& m = row.fields[4];
            if (m != "0" && m != "1") throw ParseError(lines_name, row.line, 0, "meta must be 0 or 1");
            line.meta = m == "1";
        }
        raw.lines.push_back(line);
    }
    return raw;
}

RawNetwork load_network(const std::filesystem::path& buses, const std::filesystem::path& lines) {
    return parse_network(read_text(buses), read_text(lines), buses.string(), lines.string());
}

std::string format_buses(const Network& net) {
    std::string out = std::string(kBusHeader) + "\n";
    for (const auto& [id, bus] : net.buses()) {
        out += id.str() + "," + format_double(bus.nominal_voltage_kv) + "," + format_double(bus.shunt.real()) + "," +
               format_double(bus.shunt.imag()) + "," + format_double(bus.current.real()) + "," +
               format_double(bus.current.imag()) + "\n";
    }
    return out;
}

std::string format_lines(const Network& net) {
    const auto lines = net.lines();
    bool any_meta = false;
    for (const auto& l : lines) any_meta = any_meta || l.meta;
    std::string out = std::string(kLineHeader) + (any_meta ? ",meta" : "") + "\n";
    for (const auto& l : lines) {
        out += l.a.str() + "," + l.b.str() + "," + format_double(l.admittance.real()) + "," +
               format_double(l.admittance.imag());
        if (any_meta) out += l.meta ? ",1" : ",0";
        out += "\n";
    }
    return out;
}

void save_network(const Network& net, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(dir / "buses.csv", format_buses(net));
    write_text(dir / "lines.csv", format_lines(net));
}

Network network_from_raw(const RawNetwork& raw) {
    Network net;
    for (const auto& bus : raw.buses) net.add_bus(bus);
    for (const auto& line : raw.lines) net.add_line(line.a, line.b, line.admittance, line.meta);
    return net;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace gridreduce
