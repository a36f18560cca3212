from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ltesig.rrc import (
    CnDomain,
    DlBandwidth,
    Imsi,
    IntraFreqReselection,
    Mib,
    PagingMessage,
    PagingRecord,
    PhichDuration,
    PhichResource,
    PlmnInfo,
    SchedulingInfo,
    SI_PERIODICITIES_RF,
    SI_WINDOW_LENGTHS_MS,
    Sib1,
    STmsi,
    TddConfig,
)

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=300)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = Path(__file__).parent / "fixtures"
ASN_SUBSET = FIXTURES / "rrc_subset.asn"


# ---------------------------------------------------------------- strategies

digits = st.integers(0, 9)

s_tmsis = st.builds(STmsi, st.integers(0, 0xFF), st.integers(0, 0xFFFFFFFF))
imsis = st.builds(Imsi, st.lists(digits, min_size=6, max_size=21).map(tuple))
paging_records = st.builds(
    PagingRecord, st.one_of(s_tmsis, imsis), st.sampled_from(list(CnDomain))
)
paging_messages = st.builds(
    PagingMessage,
    st.lists(paging_records, max_size=16).map(tuple),
    st.booleans(),
    st.booleans(),
)

mibs = st.builds(
    Mib,
    st.sampled_from(list(DlBandwidth)),
    st.sampled_from(list(PhichDuration)),
    st.sampled_from(list(PhichResource)),
    st.integers(0, 0xFF),
    st.integers(0, 0x3FF),
)

plmns = st.builds(
    PlmnInfo,
    st.lists(digits, min_size=2, max_size=3).map(tuple),
    st.none() | st.lists(digits, min_size=3, max_size=3).map(tuple),
    st.booleans(),
)
scheduling = st.builds(
    SchedulingInfo,
    st.sampled_from(SI_PERIODICITIES_RF),
    st.lists(st.integers(3, 18), max_size=31).map(tuple),
)
tdd = st.builds(TddConfig, st.integers(0, 6), st.integers(0, 8))

sib1s = st.builds(
    Sib1,
    plmn_list=st.lists(plmns, min_size=1, max_size=6).map(tuple),
    tracking_area_code=st.integers(0, 0xFFFF),
    cell_identity=st.integers(0, (1 << 28) - 1),
    cell_barred=st.booleans(),
    intra_freq_reselection=st.sampled_from(list(IntraFreqReselection)),
    csg_indication=st.booleans(),
    csg_identity=st.none() | st.integers(0, (1 << 27) - 1),
    q_rx_lev_min=st.integers(-70, -22),
    q_rx_lev_min_offset=st.none() | st.integers(1, 8),
    p_max=st.none() | st.integers(-30, 33),
    freq_band_indicator=st.integers(1, 64),
    scheduling_info=st.lists(scheduling, min_size=1, max_size=6).map(tuple),
    tdd_config=st.none() | tdd,
    si_window_length_ms=st.sampled_from(SI_WINDOW_LENGTHS_MS),
    system_info_value_tag=st.integers(0, 31),
)


# ------------------------------------------------- asn1tools value mapping

_SIB_TYPE_NAMES = [f"sibType{n}" for n in range(3, 12)] + [f"spare{n}" for n in range(7, 0, -1)]


def _bits(value: int, n: int) -> tuple[bytes, int]:
    nbytes = (n + 7) // 8
    return ((value << (8 * nbytes - n)).to_bytes(nbytes, "big"), n)


def paging_to_asn(msg: PagingMessage) -> dict:
    body: dict = {}
    if msg.records:
        items = []
        for rec in msg.records:
            ident = rec.ue_identity
            if isinstance(ident, STmsi):
                ue = ("s-TMSI", {"mmec": _bits(ident.mmec, 8), "m-TMSI": _bits(ident.m_tmsi, 32)})
            else:
                ue = ("imsi", list(ident.digits))
            items.append({"ue-Identity": ue, "cn-Domain": rec.cn_domain.value})
        body["pagingRecordList"] = items
    if msg.system_info_modification:
        body["systemInfoModification"] = "true"
    if msg.etws_indication:
        body["etws-Indication"] = "true"
    return {"message": ("c1", ("paging", body))}


def mib_to_asn(m: Mib) -> dict:
    return {
        "message": {
            "dl-Bandwidth": m.dl_bandwidth.value,
            "phich-Config": {
                "phich-Duration": m.phich_duration.value,
                "phich-Resource": m.phich_resource.value,
            },
            "systemFrameNumber": _bits(m.sfn_msb, 8),
            "spare": _bits(m.spare, 10),
        }
    }


def sib1_to_asn(s: Sib1) -> dict:
    plmn_list = []
    for p in s.plmn_list:
        ident = {"mnc": list(p.mnc)}
        if p.mcc is not None:
            ident["mcc"] = list(p.mcc)
        plmn_list.append(
            {
                "plmn-Identity": ident,
                "cellReservedForOperatorUse": "reserved" if p.cell_reserved else "notReserved",
            }
        )
    access = {
        "plmn-IdentityList": plmn_list,
        "trackingAreaCode": _bits(s.tracking_area_code, 16),
        "cellIdentity": _bits(s.cell_identity, 28),
        "cellBarred": "barred" if s.cell_barred else "notBarred",
        "intraFreqReselection": s.intra_freq_reselection.value,
        "csg-Indication": s.csg_indication,
    }
    if s.csg_identity is not None:
        access["csg-Identity"] = _bits(s.csg_identity, 27)
    selection = {"q-RxLevMin": s.q_rx_lev_min}
    if s.q_rx_lev_min_offset is not None:
        selection["q-RxLevMinOffset"] = s.q_rx_lev_min_offset
    body = {
        "cellAccessRelatedInfo": access,
        "cellSelectionInfo": selection,
        "freqBandIndicator": s.freq_band_indicator,
        "schedulingInfoList": [
            {
                "si-Periodicity": f"rf{info.periodicity_rf}",
                "sib-MappingInfo": [_SIB_TYPE_NAMES[t - 3] for t in info.sib_types],
            }
            for info in s.scheduling_info
        ],
        "si-WindowLength": f"ms{s.si_window_length_ms}",
        "systemInfoValueTag": s.system_info_value_tag,
    }
    if s.p_max is not None:
        body["p-Max"] = s.p_max
    if s.tdd_config is not None:
        body["tdd-Config"] = {
            "subframeAssignment": f"sa{s.tdd_config.subframe_assignment}",
            "specialSubframePatterns": f"ssp{s.tdd_config.special_subframe_patterns}",
        }
    return {"message": ("c1", ("systemInformationBlockType1", body))}


@pytest.fixture(scope="session")
def asn_oracle():
    asn1tools = pytest.importorskip("asn1tools")
    return asn1tools.compile_files(str(ASN_SUBSET), "uper")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
