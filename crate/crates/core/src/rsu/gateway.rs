//! Center-to-air translation of verbose traffic-center records into compact DENs.

use thiserror::Error;

use crate::messages::{
    encoded_len, CenterKind, CenterMessage, DenDraft, DenMessage, EventType, Message, MessageId, StationId,
    StationType, Timestamp,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("center message expired at {expires_at}, now {now}")]
    ExpiredInput { expires_at: Timestamp, now: Timestamp },
    #[error("translated DEN ({encoded} bytes) is not smaller than the center payload ({text_bytes} bytes)")]
    NotSmaller { encoded: usize, text_bytes: u64 },
    #[error("translated DEN invalid: {0}")]
    Invalid(String),
}

pub fn event_for(kind: CenterKind) -> EventType {
    match kind {
        CenterKind::RoadworksNotice => EventType::Roadworks,
        CenterKind::WeatherAdvisory => EventType::GeneralSlipperinessAdvisory,
        CenterKind::CongestionNotice => EventType::Congestion,
        CenterKind::InfotainmentContent { service } => EventType::Infotainment { service },
    }
}

/// Builds the air DEN for a center record. `seq` is the RSU's next DEN
/// sequence number.
pub fn translate_center(
    msg: &CenterMessage,
    rsu: StationId,
    rsu_type: StationType,
    seq: u32,
    now: Timestamp,
) -> Result<DenMessage, GatewayError> {
    if msg.expires_at() <= now {
        return Err(GatewayError::ExpiredInput { expires_at: msg.expires_at(), now });
    }
    let den = DenDraft {
        message_id: MessageId { source: rsu, seq },
        station_type: rsu_type,
        event: event_for(msg.kind()),
        event_position: msg.payload_area().anchor(),
        validity_area: msg.payload_area().clone(),
        relevance_zone: msg.relevance_zone().clone(),
        generated_at: now,
        expires_at: msg.expires_at(),
        detail: None,
    }
    .build()
    .map_err(|e| GatewayError::Invalid(e.to_string()))?;
    let encoded = encoded_len(&Message::Den(den.clone()));
    if encoded as u64 >= msg.text_bytes() {
        return Err(GatewayError::NotSmaller { encoded, text_bytes: msg.text_bytes() });
    }
    Ok(den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Area, GeoPosition, Polyline};
    use crate::messages::{RelevanceZone, RsuKind, ServiceId};

    fn center(kind: CenterKind, text_bytes: u64, expires_at: u64) -> CenterMessage {
        let bridge = Area::polygon(vec![
            GeoPosition::new(0, -1000),
            GeoPosition::new(20_000, -1000),
            GeoPosition::new(20_000, 1000),
            GeoPosition::new(0, 1000),
        ])
        .unwrap();
        let zone = RelevanceZone::TraceChain {
            chain: Polyline::new(vec![GeoPosition::new(-50_000, 0), GeoPosition::new(20_000, 0)]).unwrap(),
            lateral_max: 500,
        };
        CenterMessage::new(kind, bridge, zone, text_bytes, expires_at).unwrap()
    }

    const RSU: StationType = StationType::Rsu(RsuKind::Central);

    #[test]
    fn weather_advisory_becomes_rsu_slipperiness_den() {
        let den =
            translate_center(&center(CenterKind::WeatherAdvisory, 4000, 90_000), StationId(50), RSU, 3, 1000).unwrap();
        assert_eq!(den.event(), EventType::GeneralSlipperinessAdvisory);
        assert_eq!(den.source(), StationId(50));
        assert_eq!(den.seq(), 3);
        assert!(den.station_type().is_rsu());
        assert_eq!(den.expires_at(), 90_000);
    }

    #[test]
    fn encoded_den_smaller_than_center_payload() {
        let den =
            translate_center(&center(CenterKind::RoadworksNotice, 4000, 90_000), StationId(50), RSU, 1, 0).unwrap();
        assert!(encoded_len(&Message::Den(den)) < 4000);
        let err = translate_center(&center(CenterKind::RoadworksNotice, 50, 90_000), StationId(50), RSU, 1, 0);
        assert!(matches!(err, Err(GatewayError::NotSmaller { .. })));
    }

    #[test]
    fn infotainment_content_maps_to_infotainment_channel() {
        let kind = CenterKind::InfotainmentContent { service: ServiceId(7) };
        let den = translate_center(&center(kind, 4000, 90_000), StationId(50), RSU, 1, 0).unwrap();
        assert_eq!(den.event(), EventType::Infotainment { service: ServiceId(7) });
        assert!(Message::Den(den).is_infotainment());
    }

    #[test]
    fn expired_input_rejected() {
        let err = translate_center(&center(CenterKind::CongestionNotice, 4000, 1000), StationId(50), RSU, 1, 1000);
        assert_eq!(err, Err(GatewayError::ExpiredInput { expires_at: 1000, now: 1000 }));
    }
}
