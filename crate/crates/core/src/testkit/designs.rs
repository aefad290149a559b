//! Reference compositions: the two demo designs and one minimal fixture per
//! checker code.

use crate::mats::{BlockInstance, CompositionDocument, PortRef, PowerRail};
use crate::model::VoltageRange;

use super::blocks;

struct Doc {
    lib: crate::library::Library,
    doc: CompositionDocument,
}

impl Doc {
    fn new(name: &str) -> Self {
        Self {
            lib: blocks::library(),
            doc: CompositionDocument::new(name),
        }
    }

    fn inst(mut self, name: &str, block_id: &str) -> Self {
        self.doc
            .add_instance(&self.lib, BlockInstance::new(name, block_id, "1.0"))
            .expect("fixture instance");
        self
    }

    fn rail(mut self, rail: PowerRail) -> Self {
        self.doc.add_rail(rail).expect("fixture rail");
        self
    }

    fn power(self, name: &str, volts: f64) -> Self {
        self.rail(PowerRail::power(name, VoltageRange::point(volts)))
    }

    fn attach(mut self, port: &str, rail: &str) -> Self {
        self.doc
            .attach_power(&self.lib, port_ref(port), rail)
            .expect("fixture attachment");
        self
    }

    fn edge(mut self, a: &str, b: &str, net_name: Option<&str>) -> Self {
        self.doc
            .connect_signal(&self.lib, port_ref(a), port_ref(b), net_name.map(str::to_owned))
            .expect("fixture edge");
        self
    }

    /// Attaches `inst.VDD` (or `VCC`) and `inst.GND` where present.
    fn supply(self, inst: &str, rail: &str) -> Self {
        let block_id = self.doc.instance(inst).expect("instance").block_id.clone();
        let block = self.lib.get(&block_id).expect("block").clone();
        let mut me = self;
        for p in ["VDD", "VCC"] {
            if block.port(p).is_some() {
                me = me.attach(&format!("{inst}.{p}"), rail);
            }
        }
        if block.port("GND").is_some() {
            me = me.attach(&format!("{inst}.GND"), "GND");
        }
        me
    }

    fn done(self) -> CompositionDocument {
        self.doc
    }
}

fn port_ref(s: &str) -> PortRef {
    let (i, p) = s.split_once('.').expect("instance.port");
    PortRef::new(i, p)
}

/// 5 V input, 3.3 V regulator, MCU, temperature sensor and pull-ups.
fn powered_base(name: &str) -> Doc {
    Doc::new(name)
        .rail(PowerRail::power("5V", VoltageRange::point(5.0)).with_supply(500.0))
        .rail(PowerRail::power("3V3", VoltageRange::point(3.3)).with_parent("5V"))
        .rail(PowerRail::ground("GND"))
        .inst("mcu", "mcu33")
        .inst("ldo", "ldo_3v3")
        .attach("ldo.VIN", "5V")
        .attach("ldo.VOUT", "3V3")
        .attach("ldo.GND", "GND")
        .supply("mcu", "3V3")
}

pub fn env_node() -> CompositionDocument {
    powered_base("env_node")
        .inst("sensor", "temp_sensor")
        .inst("pullups", "i2c_pullups")
        .supply("sensor", "3V3")
        .supply("pullups", "3V3")
        .edge("mcu.SDA", "sensor.SDA", Some("SDA"))
        .edge("mcu.SCL", "sensor.SCL", Some("SCL"))
        .edge("pullups.SDA", "mcu.SDA", None)
        .edge("pullups.SCL", "mcu.SCL", None)
        .done()
}

pub fn gps_logger() -> CompositionDocument {
    powered_base("gps_logger")
        .inst("gps", "gps_module")
        .supply("gps", "3V3")
        .edge("mcu.TX", "gps.RX", Some("GPS_RX"))
        .edge("mcu.RX", "gps.TX", Some("GPS_TX"))
        .done()
}

fn rails33() -> Doc {
    Doc::new("fixture")
        .power("3V3", 3.3)
        .rail(PowerRail::ground("GND"))
}

/// Minimal composition expected to produce exactly `code`.
pub fn catalog(code: &str) -> Option<CompositionDocument> {
    let d = match code {
        // SDA wired to SCL on one controller
        "E001" => rails33()
            .inst("mcu", "mcu33")
            .supply("mcu", "3V3")
            .edge("mcu.SDA", "mcu.SCL", None),
        "E002" => rails33()
            .inst("a", "mcu33")
            .inst("b", "mcu33")
            .inst("pullups", "i2c_pullups")
            .supply("a", "3V3")
            .supply("b", "3V3")
            .supply("pullups", "3V3")
            .edge("a.SDA", "b.SDA", None)
            .edge("a.SCL", "b.SCL", None)
            .edge("pullups.SDA", "a.SDA", None)
            .edge("pullups.SCL", "a.SCL", None),
        // 5 V driver into an input limited to 3.6 V
        "E003" => rails33()
            .power("5V", 5.0)
            .inst("drv", "gpio_out5")
            .inst("rcv", "gpio_in33")
            .supply("drv", "5V")
            .supply("rcv", "3V3")
            .edge("drv.OUT", "rcv.IN", None),
        "E004" => Doc::new("fixture")
            .rail(PowerRail::power("3V3", VoltageRange::point(3.3)).with_supply(10.0))
            .rail(PowerRail::ground("GND"))
            .inst("mcu", "mcu33")
            .supply("mcu", "3V3"),
        "E005" => rails33()
            .inst("mcu", "mcu33")
            .inst("s1", "fixed_addr_sensor")
            .inst("s2", "fixed_addr_sensor")
            .inst("pullups", "i2c_pullups")
            .supply("mcu", "3V3")
            .supply("s1", "3V3")
            .supply("s2", "3V3")
            .supply("pullups", "3V3")
            .edge("mcu.SDA", "s1.SDA", None)
            .edge("mcu.SDA", "s2.SDA", None)
            .edge("mcu.SDA", "pullups.SDA", None)
            .edge("mcu.SCL", "s1.SCL", None)
            .edge("mcu.SCL", "s2.SCL", None)
            .edge("mcu.SCL", "pullups.SCL", None),
        // ground port left off an existing ground rail
        "E006" => rails33().inst("mcu", "mcu33").attach("mcu.VDD", "3V3"),
        "E007" => Doc::new("fixture")
            .power("5V", 5.0)
            .rail(PowerRail::ground("GND"))
            .inst("mcu", "mcu33")
            .supply("mcu", "5V"),
        "W101" => rails33()
            .power("5V", 5.0)
            .inst("wide", "wide_input")
            .attach("wide.GND", "GND"),
        "W102" => Doc::new("fixture")
            .power("12V", 12.0)
            .rail(PowerRail::ground("GND"))
            .inst("wide", "wide_input")
            .attach("wide.GND", "GND"),
        "W103" => rails33()
            .inst("mcu", "mcu33")
            .inst("sensor", "temp_sensor")
            .supply("mcu", "3V3")
            .supply("sensor", "3V3")
            .edge("mcu.SDA", "sensor.SDA", None)
            .edge("mcu.SCL", "sensor.SCL", None),
        // SCL left floating beside a connected SDA
        "W104" => rails33()
            .inst("mcu", "mcu33")
            .inst("sensor", "temp_sensor")
            .inst("pullups", "i2c_pullups")
            .supply("mcu", "3V3")
            .supply("sensor", "3V3")
            .supply("pullups", "3V3")
            .edge("mcu.SDA", "sensor.SDA", None)
            .edge("mcu.SDA", "pullups.SDA", None),
        _ => return None,
    };
    let mut doc = d.done();
    doc.name = format!("catalog_{}", code.to_ascii_lowercase());
    Some(doc)
}
