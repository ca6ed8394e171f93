"""Shipped region-name table and simplified world outline.

Covers countries plus a selection of first-level subdivisions (US states,
Japanese prefectures, Chinese provinces, and a few more).  Centroids are
approximate (lon, lat) and only used to place glyphs on the bundled
base map; no geocoding service is involved.
"""

from __future__ import annotations

import re
import unicodedata

# name -> (lon, lat)
_COUNTRIES: dict[str, tuple[float, float]] = {
    "afghanistan": (66.0, 33.9), "albania": (20.1, 41.1), "algeria": (2.6, 28.2),
    "angola": (17.5, -12.3), "argentina": (-63.6, -38.4), "armenia": (45.0, 40.3),
    "australia": (133.8, -25.3), "austria": (14.6, 47.5), "azerbaijan": (47.5, 40.1),
    "bangladesh": (90.4, 23.7), "belarus": (27.9, 53.7), "belgium": (4.5, 50.5),
    "bolivia": (-63.6, -16.3), "bosnia and herzegovina": (17.7, 43.9),
    "botswana": (24.7, -22.3), "brazil": (-51.9, -14.2), "bulgaria": (25.5, 42.7),
    "cambodia": (105.0, 12.6), "cameroon": (12.4, 7.4), "canada": (-106.3, 56.1),
    "chad": (18.7, 15.5), "chile": (-71.5, -35.7), "china": (104.2, 35.9),
    "colombia": (-74.3, 4.6), "costa rica": (-83.8, 9.7), "croatia": (15.2, 45.1),
    "cuba": (-77.8, 21.5), "cyprus": (33.4, 35.1), "czechia": (15.5, 49.8),
    "democratic republic of the congo": (23.7, -4.0), "denmark": (9.5, 56.3),
    "dominican republic": (-70.2, 18.7), "ecuador": (-78.2, -1.8),
    "egypt": (30.8, 26.8), "el salvador": (-88.9, 13.8), "estonia": (25.0, 58.6),
    "ethiopia": (40.5, 9.1), "finland": (25.7, 61.9), "france": (2.2, 46.2),
    "georgia": (43.4, 42.3), "germany": (10.5, 51.2), "ghana": (-1.0, 7.9),
    "greece": (21.8, 39.1), "greenland": (-42.6, 71.7), "guatemala": (-90.2, 15.8),
    "haiti": (-72.3, 19.0), "honduras": (-86.2, 15.2), "hungary": (19.5, 47.2),
    "iceland": (-19.0, 64.9), "india": (78.9, 20.6), "indonesia": (113.9, -0.8),
    "iran": (53.7, 32.4), "iraq": (43.7, 33.2), "ireland": (-8.2, 53.4),
    "israel": (34.9, 31.0), "italy": (12.6, 41.9), "jamaica": (-77.3, 18.1),
    "japan": (138.3, 36.2), "jordan": (36.2, 30.6), "kazakhstan": (66.9, 48.0),
    "kenya": (37.9, -0.0), "kuwait": (47.5, 29.3), "kyrgyzstan": (74.8, 41.2),
    "laos": (102.5, 19.9), "latvia": (24.6, 56.9), "lebanon": (35.9, 33.9),
    "libya": (17.2, 26.3), "lithuania": (23.9, 55.2), "luxembourg": (6.1, 49.8),
    "madagascar": (46.9, -18.8), "malawi": (34.3, -13.3), "malaysia": (102.0, 4.2),
    "mali": (-4.0, 17.6), "malta": (14.4, 35.9), "mexico": (-102.6, 23.6),
    "moldova": (28.4, 47.4), "mongolia": (103.8, 46.9), "montenegro": (19.4, 42.7),
    "morocco": (-7.1, 31.8), "mozambique": (35.5, -18.7), "myanmar": (96.0, 21.9),
    "namibia": (18.5, -22.96), "nepal": (84.1, 28.4), "netherlands": (5.3, 52.1),
    "new zealand": (174.9, -40.9), "nicaragua": (-85.2, 12.9), "niger": (8.1, 17.6),
    "nigeria": (8.7, 9.1), "north korea": (127.5, 40.3),
    "north macedonia": (21.7, 41.6), "norway": (8.5, 60.5), "oman": (56.0, 21.5),
    "pakistan": (69.3, 30.4), "panama": (-80.8, 8.5),
    "papua new guinea": (144.0, -6.3), "paraguay": (-58.4, -23.4),
    "peru": (-75.0, -9.2), "philippines": (121.8, 12.9), "poland": (19.1, 51.9),
    "portugal": (-8.2, 39.4), "qatar": (51.2, 25.4), "romania": (25.0, 45.9),
    "russia": (105.3, 61.5), "rwanda": (29.9, -1.9), "saudi arabia": (45.1, 23.9),
    "senegal": (-14.5, 14.5), "serbia": (21.0, 44.0), "singapore": (103.8, 1.35),
    "slovakia": (19.7, 48.7), "slovenia": (15.0, 46.2), "somalia": (46.2, 5.2),
    "south africa": (22.9, -30.6), "south korea": (127.8, 35.9),
    "south sudan": (31.3, 6.9), "spain": (-3.7, 40.5), "sri lanka": (80.8, 7.9),
    "sudan": (30.2, 12.9), "sweden": (18.6, 60.1), "switzerland": (8.2, 46.8),
    "syria": (39.0, 34.8), "taiwan": (121.0, 23.7), "tajikistan": (71.3, 38.9),
    "tanzania": (34.9, -6.4), "thailand": (101.0, 15.9), "tunisia": (9.5, 33.9),
    "turkey": (35.2, 39.0), "turkmenistan": (59.6, 38.97), "uganda": (32.3, 1.4),
    "ukraine": (31.2, 48.4), "united arab emirates": (53.8, 23.4),
    "united kingdom": (-3.4, 55.4), "united states": (-95.7, 37.1),
    "uruguay": (-55.8, -32.5), "uzbekistan": (64.6, 41.4),
    "venezuela": (-66.6, 6.4), "vietnam": (108.3, 14.1), "yemen": (48.5, 15.6),
    "zambia": (27.8, -13.1), "zimbabwe": (29.2, -19.0),
}

_US_STATES: dict[str, tuple[float, float]] = {
    "alabama": (-86.8, 32.8), "alaska": (-152.4, 61.4), "arizona": (-111.7, 34.3),
    "arkansas": (-92.4, 34.9), "california": (-119.4, 36.8),
    "colorado": (-105.5, 39.0), "connecticut": (-72.7, 41.6),
    "delaware": (-75.5, 39.0), "florida": (-81.7, 27.8), "hawaii": (-157.5, 20.3),
    "idaho": (-114.5, 44.2), "illinois": (-89.2, 40.0), "indiana": (-86.3, 39.9),
    "iowa": (-93.5, 42.0), "kansas": (-98.4, 38.5), "kentucky": (-84.9, 37.5),
    "louisiana": (-92.0, 31.0), "maine": (-69.2, 45.4), "maryland": (-76.8, 39.0),
    "massachusetts": (-71.8, 42.3), "michigan": (-84.7, 44.3),
    "minnesota": (-94.3, 46.3), "mississippi": (-89.7, 32.7),
    "missouri": (-92.5, 38.4), "montana": (-109.6, 47.0), "nebraska": (-99.8, 41.5),
    "nevada": (-116.6, 39.3), "new hampshire": (-71.6, 43.7),
    "new jersey": (-74.4, 40.1), "new mexico": (-106.1, 34.4),
    "new york": (-75.5, 43.0), "north carolina": (-79.4, 35.5),
    "north dakota": (-100.5, 47.5), "ohio": (-82.8, 40.3),
    "oklahoma": (-97.5, 35.6), "oregon": (-120.6, 44.0),
    "pennsylvania": (-77.8, 40.9), "rhode island": (-71.5, 41.7),
    "south carolina": (-80.9, 33.9), "south dakota": (-100.2, 44.4),
    "tennessee": (-86.3, 35.9), "texas": (-99.3, 31.5), "utah": (-111.7, 39.3),
    "vermont": (-72.7, 44.1), "virginia": (-78.8, 37.5),
    "washington": (-120.4, 47.4), "west virginia": (-80.6, 38.6),
    "wisconsin": (-89.9, 44.6), "wyoming": (-107.6, 43.0),
}

_SUBDIVISIONS: dict[str, tuple[float, float]] = {
    # Japan (prefectures, selection)
    "tokyo": (139.7, 35.7), "osaka": (135.5, 34.7), "hokkaido": (142.8, 43.2),
    "kyoto": (135.8, 35.0), "okinawa": (127.9, 26.3), "fukuoka": (130.4, 33.6),
    "aichi": (137.0, 35.0), "hiroshima": (132.5, 34.4),
    # China (provinces / municipalities, selection)
    "beijing": (116.4, 39.9), "shanghai": (121.5, 31.2), "guangdong": (113.4, 23.4),
    "sichuan": (102.7, 30.6), "yunnan": (101.5, 24.5), "tibet": (88.1, 31.7),
    "xinjiang": (85.2, 41.1), "shandong": (118.1, 36.3),
    # Germany (Laender, selection)
    "bavaria": (11.4, 48.8), "berlin": (13.4, 52.5), "saxony": (13.2, 51.1),
    "hamburg": (10.0, 53.6), "hesse": (9.0, 50.6),
    # UK nations
    "england": (-1.2, 52.6), "scotland": (-4.2, 56.5), "wales": (-3.8, 52.3),
    "northern ireland": (-6.5, 54.6),
    # Canada (provinces, selection)
    "ontario": (-85.3, 50.0), "quebec": (-71.8, 52.9),
    "british columbia": (-124.9, 54.7), "alberta": (-115.0, 55.0),
    "manitoba": (-97.7, 53.8), "nova scotia": (-63.0, 45.1),
    # Australia (states)
    "new south wales": (147.0, -32.0), "victoria": (144.0, -36.8),
    "queensland": (144.0, -22.5), "western australia": (122.0, -25.5),
    "south australia": (135.0, -30.0), "tasmania": (146.6, -42.0),
    # France (regions, selection)
    "ile-de-france": (2.5, 48.7), "brittany": (-2.9, 48.2),
    "normandy": (0.1, 49.1), "occitanie": (2.2, 43.7),
    # India (states, selection)
    "maharashtra": (75.7, 19.6), "kerala": (76.4, 10.5), "punjab": (75.4, 31.0),
    "rajasthan": (73.8, 26.6), "west bengal": (87.9, 23.7),
    # Brazil (states, selection)
    "sao paulo": (-48.7, -22.5), "amazonas": (-64.8, -4.2), "bahia": (-41.7, -12.5),
}

_ALIASES: dict[str, str] = {
    "usa": "united states", "us": "united states", "u.s.": "united states",
    "u.s.a.": "united states", "united states of america": "united states",
    "america": "united states", "uk": "united kingdom",
    "great britain": "united kingdom", "britain": "united kingdom",
    "czech republic": "czechia", "south korea (republic of korea)": "south korea",
    "republic of korea": "south korea", "korea": "south korea",
    "uae": "united arab emirates", "drc": "democratic republic of the congo",
    "prc": "china", "peoples republic of china": "china",
    "russian federation": "russia", "viet nam": "vietnam", "burma": "myanmar",
    "holland": "netherlands", "ivory coast": "cote divoire",
}

REGION_CENTROIDS: dict[str, tuple[float, float]] = {
    **_COUNTRIES, **_US_STATES, **_SUBDIVISIONS,
}


def normalize_region(text: str) -> str:
    folded = unicodedata.normalize("NFKD", text).encode("ascii", "ignore").decode()
    folded = folded.casefold().strip()
    folded = re.sub(r"[\s]+", " ", folded)
    return _ALIASES.get(folded, folded)


def lookup_region(text: str) -> tuple[float, float] | None:
    """Centroid (lon, lat) for a region name, or None when unknown."""
    return REGION_CENTROIDS.get(normalize_region(text))


def is_region(text: str) -> bool:
    return normalize_region(text) in REGION_CENTROIDS


# Very coarse continent outlines (lon, lat rings) for the backdrop map.
WORLD_OUTLINE: list[list[tuple[float, float]]] = [
    # North America
    [(-168, 66), (-140, 70), (-122, 74), (-95, 72), (-80, 73), (-62, 60),
     (-52, 47), (-67, 44), (-75, 35), (-81, 31), (-80, 25), (-90, 29),
     (-97, 26), (-92, 17), (-83, 8), (-95, 16), (-105, 20), (-114, 28),
     (-124, 40), (-128, 50), (-152, 58), (-166, 60)],
    # South America
    [(-81, 8), (-72, 11), (-61, 10), (-50, 0), (-35, -8), (-40, -22),
     (-48, -28), (-58, -34), (-65, -41), (-71, -52), (-69, -55), (-74, -46),
     (-72, -37), (-70, -22), (-77, -12), (-80, -3)],
    # Africa
    [(-17, 21), (-6, 35), (10, 37), (20, 32), (32, 31), (43, 12), (51, 11),
     (40, -2), (40, -15), (35, -24), (31, -29), (20, -35), (15, -27),
     (12, -18), (9, -1), (-8, 4), (-13, 9), (-17, 15)],
    # Eurasia
    [(-10, 36), (-9, 43), (-4, 48), (-5, 58), (5, 62), (18, 70), (40, 68),
     (68, 69), (95, 76), (130, 72), (160, 70), (179, 65), (160, 60),
     (142, 53), (135, 43), (122, 39), (122, 30), (109, 21), (105, 9),
     (98, 8), (100, 14), (91, 22), (80, 15), (77, 8), (72, 20), (66, 25),
     (57, 25), (51, 28), (48, 30), (35, 28), (33, 36), (27, 37), (23, 36),
     (19, 40), (15, 38), (12, 44), (3, 43), (-2, 36)],
    # Australia
    [(114, -22), (122, -18), (131, -12), (137, -12), (142, -11), (147, -19),
     (153, -26), (151, -34), (144, -38), (140, -38), (137, -35), (129, -32),
     (124, -33), (115, -34), (113, -26)],
    # Greenland
    [(-58, 76), (-44, 83), (-25, 82), (-20, 76), (-25, 70), (-40, 60),
     (-48, 61), (-53, 67), (-55, 71)],
]
