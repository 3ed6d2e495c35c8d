#!/usr/bin/env python3
"""Regenerates the SQLite fixture databases under databases/.

The committed .sqlite files are the source of truth for tests; rerun this
only when the fixture data itself needs to change.
"""
import os
import sqlite3

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "databases")

DATABASES = {
    "network_1": """
CREATE TABLE Highschooler (ID INTEGER PRIMARY KEY, name TEXT, grade INTEGER);
CREATE TABLE Friend (student_id INTEGER, friend_id INTEGER,
  PRIMARY KEY (student_id, friend_id),
  FOREIGN KEY (student_id) REFERENCES Highschooler(ID),
  FOREIGN KEY (friend_id) REFERENCES Highschooler(ID));
CREATE TABLE Likes (student_id INTEGER, liked_id INTEGER,
  PRIMARY KEY (student_id, liked_id),
  FOREIGN KEY (student_id) REFERENCES Highschooler(ID),
  FOREIGN KEY (liked_id) REFERENCES Highschooler(ID));
INSERT INTO Highschooler VALUES
  (1510, 'Jordan', 9), (1689, 'Gabriel', 9), (1381, 'Tiffany', 9), (1709, 'Cassandra', 9),
  (1101, 'Haley', 10), (1782, 'Andrew', 10), (1468, 'Kris', 10), (1641, 'Brittany', 10),
  (1247, 'Alexis', 11), (1316, 'Austin', 11), (1911, 'Gabriel', 11), (1501, 'Jessica', 11),
  (1304, 'Jordan', 12), (1025, 'John', 12), (1934, 'Kyle', 12), (1661, 'Logan', 12);
INSERT INTO Friend VALUES
  (1510, 1381), (1510, 1689), (1689, 1709), (1381, 1247), (1709, 1247),
  (1689, 1782), (1782, 1468), (1782, 1316), (1782, 1304), (1468, 1101),
  (1468, 1641), (1101, 1641), (1247, 1911), (1247, 1501), (1911, 1501),
  (1501, 1934), (1316, 1934), (1934, 1304), (1304, 1661), (1661, 1025);
INSERT INTO Likes VALUES
  (1689, 1709), (1709, 1689), (1782, 1709), (1911, 1247), (1247, 1468),
  (1641, 1468), (1316, 1304), (1501, 1934), (1934, 1501), (1025, 1101);
""",
    "world_1": """
CREATE TABLE country (Code TEXT PRIMARY KEY, Name TEXT, Continent TEXT, Region TEXT,
  Population INTEGER, LifeExpectancy REAL, GNP REAL);
CREATE TABLE countrylanguage (CountryCode TEXT, Language TEXT, IsOfficial TEXT, Percentage REAL,
  PRIMARY KEY (CountryCode, Language),
  FOREIGN KEY (CountryCode) REFERENCES country(Code));
CREATE TABLE city (ID INTEGER PRIMARY KEY, Name TEXT, CountryCode TEXT, Population INTEGER,
  FOREIGN KEY (CountryCode) REFERENCES country(Code));
INSERT INTO country VALUES
  ('ABW', 'Aruba', 'North America', 'Caribbean', 103000, 78.4, 828.0),
  ('ARG', 'Argentina', 'South America', 'South America', 37032000, 75.1, 340238.0),
  ('BRA', 'Brazil', 'South America', 'South America', 170115000, 62.9, 776739.0),
  ('CHN', 'China', 'Asia', 'Eastern Asia', 1277558000, 71.4, 982268.0),
  ('EGY', 'Egypt', 'Africa', 'Northern Africa', 68470000, 63.3, 82710.0),
  ('ESP', 'Spain', 'Europe', 'Southern Europe', 39441700, 78.8, 553223.0),
  ('IND', 'India', 'Asia', 'Southern and Central Asia', 1013662000, 62.5, 447114.0),
  ('JPN', 'Japan', 'Asia', 'Eastern Asia', 126714000, 80.7, 3787042.0),
  ('MEX', 'Mexico', 'North America', 'Central America', 98881000, 71.5, 414972.0),
  ('NGA', 'Nigeria', 'Africa', 'Western Africa', 111506000, 51.6, 65707.0),
  ('USA', 'United States', 'North America', 'North America', 278357000, 77.1, 8510700.0),
  ('ZAF', 'South Africa', 'Africa', 'Southern Africa', 40377000, 51.1, 116729.0);
INSERT INTO countrylanguage VALUES
  ('ABW', 'Dutch', 'T', 5.3), ('ABW', 'English', 'F', 9.5), ('ABW', 'Papiamento', 'F', 76.7),
  ('ABW', 'Spanish', 'F', 7.4),
  ('ARG', 'Spanish', 'T', 96.8), ('ARG', 'Italian', 'F', 1.7),
  ('BRA', 'Portuguese', 'T', 97.5), ('BRA', 'German', 'F', 0.5),
  ('CHN', 'Chinese', 'T', 92.0),
  ('EGY', 'Arabic', 'T', 98.8),
  ('ESP', 'Spanish', 'T', 74.4), ('ESP', 'Catalan', 'F', 16.9),
  ('IND', 'Hindi', 'T', 39.9), ('IND', 'Bengali', 'F', 8.2),
  ('JPN', 'Japanese', 'T', 99.1),
  ('MEX', 'Spanish', 'T', 92.1), ('MEX', 'Nahuatl', 'F', 1.8),
  ('NGA', 'English', 'T', 0.0), ('NGA', 'Hausa', 'F', 21.1),
  ('USA', 'English', 'T', 86.2), ('USA', 'Spanish', 'F', 7.5),
  ('ZAF', 'English', 'T', 8.5), ('ZAF', 'Zulu', 'T', 22.7);
INSERT INTO city VALUES
  (1, 'Oranjestad', 'ABW', 29034), (2, 'Buenos Aires', 'ARG', 2982146),
  (3, 'Sao Paulo', 'BRA', 9968485), (4, 'Shanghai', 'CHN', 9696300),
  (5, 'Cairo', 'EGY', 6789479), (6, 'Madrid', 'ESP', 2879052),
  (7, 'Mumbai', 'IND', 10500000), (8, 'Tokyo', 'JPN', 7980230),
  (9, 'Mexico City', 'MEX', 8591309), (10, 'Lagos', 'NGA', 1518000),
  (11, 'New York', 'USA', 8008278), (12, 'Cape Town', 'ZAF', 2352121),
  (13, 'Los Angeles', 'USA', 3694820), (14, 'Barcelona', 'ESP', 1503451);
""",
    "voter_1": """
CREATE TABLE AREA_CODE_STATE (area_code INTEGER PRIMARY KEY, state TEXT);
CREATE TABLE CONTESTANTS (contestant_number INTEGER PRIMARY KEY, contestant_name TEXT);
CREATE TABLE VOTES (vote_id INTEGER PRIMARY KEY, phone_number INTEGER, state TEXT,
  contestant_number INTEGER, created TEXT,
  FOREIGN KEY (contestant_number) REFERENCES CONTESTANTS(contestant_number));
INSERT INTO AREA_CODE_STATE VALUES
  (201, 'NJ'), (202, 'DC'), (203, 'CT'), (205, 'AL'), (206, 'WA'),
  (207, 'ME'), (208, 'ID'), (209, 'CA'), (210, 'TX'), (212, 'NY');
INSERT INTO CONTESTANTS VALUES
  (1, 'Edwina Burnam'), (2, 'Tabatha Gehling'), (3, 'Kelly Clauss'), (4, 'Jessie Alloway'),
  (5, 'Alana Bregman'), (6, 'Jessie Eichman'), (7, 'Allie Rogalski'), (8, 'Nita Coster'),
  (9, 'Kurt Walser'), (10, 'Ericka Dieter'), (11, 'Loraine NygrenTania Mattioli');
INSERT INTO VOTES VALUES
  (1, 7182887233, 'NY', 2, '2018-03-09 19:03:21'),
  (2, 7148407040, 'NY', 3, '2018-03-09 19:03:36'),
  (3, 6209222712, 'CA', 3, '2018-03-09 19:03:39'),
  (5, 5112677315, 'NY', 5, '2018-03-09 19:03:40'),
  (6, 2012677315, 'NJ', 2, '2018-03-09 19:03:41'),
  (7, 2022677315, 'DC', 2, '2018-03-09 19:03:42'),
  (8, 2062677315, 'WA', 3, '2018-03-09 19:03:43'),
  (9, 2102677315, 'TX', 4, '2018-03-09 19:03:44');
""",
    "apartment_rentals": """
CREATE TABLE Apartments (apt_id INTEGER PRIMARY KEY, building_id INTEGER, apt_type_code TEXT,
  apt_number TEXT, bathroom_count INTEGER, bedroom_count INTEGER, room_count TEXT);
CREATE TABLE Guests (guest_id INTEGER PRIMARY KEY, gender_code TEXT, guest_first_name TEXT,
  guest_last_name TEXT, date_of_birth TEXT);
CREATE TABLE Apartment_Bookings (apt_booking_id INTEGER PRIMARY KEY, apt_id INTEGER,
  guest_id INTEGER, booking_status_code TEXT, booking_start_date TEXT, booking_end_date TEXT,
  FOREIGN KEY (apt_id) REFERENCES Apartments(apt_id),
  FOREIGN KEY (guest_id) REFERENCES Guests(guest_id));
INSERT INTO Apartments VALUES
  (1, 808, 'Flat', 'Suite 645', 1, 3, '7'), (2, 790, 'Flat', 'Apt. 585', 2, 4, '5'),
  (3, 133, 'Flat', 'Apt. 908', 3, 6, '7'), (4, 722, 'Studio', 'Suite 749', 3, 5, '8'),
  (5, 556, 'Duplex', 'Suite 307', 2, 6, '3'), (6, 225, 'Studio', 'Apt. 187', 2, 3, '9'),
  (7, 225, 'Flat', 'Suite 088', 2, 4, '6'), (8, 808, 'Duplex', 'Suite 693', 1, 5, '9');
INSERT INTO Guests VALUES
  (1, 'Male', 'Kip', 'DuBuque', '1995-11-04 07:09:57'),
  (2, 'Unknown', 'Rebeca', 'Runolfsdottir', '1974-05-12 21:53:58'),
  (3, 'Female', 'Keon', 'Treutel', '1974-08-20 09:28:05'),
  (4, 'Female', 'Gabe', 'Bode', '2007-09-11 19:01:39'),
  (5, 'Female', 'Lou', 'Grady', '1997-01-15 17:37:40'),
  (6, 'Male', 'Josefina', 'Jerde', '1978-03-08 04:43:04');
INSERT INTO Apartment_Bookings VALUES
  (258, 8, 2, 'Provisional', '2016-09-26 17:13:49', '2017-10-07 11:38:48'),
  (279, 7, 1, 'Provisional', '2016-04-01 06:28:08', '2017-10-25 11:08:42'),
  (337, 6, 3, 'Provisional', '2017-03-13 16:20:14', '2018-02-19 16:59:08'),
  (343, 2, 4, 'Confirmed', '2017-08-24 13:58:59', '2018-02-25 17:10:38'),
  (365, 1, 5, 'Provisional', '2016-07-31 18:42:59', '2017-12-10 09:33:40'),
  (401, 3, 1, 'Confirmed', '2016-11-05 14:12:59', '2017-10-14 07:53:03'),
  (497, 4, 6, 'Confirmed', '2016-05-10 11:07:32', '2018-03-17 01:42:04');
""",
    "wta_1": """
CREATE TABLE players (player_id INTEGER PRIMARY KEY, first_name TEXT, last_name TEXT,
  hand TEXT, birth_date TEXT, country_code TEXT);
CREATE TABLE matches (match_num INTEGER, tourney_name TEXT, year INTEGER,
  winner_id INTEGER, winner_name TEXT, winner_hand TEXT,
  loser_id INTEGER, loser_name TEXT, loser_hand TEXT,
  FOREIGN KEY (winner_id) REFERENCES players(player_id),
  FOREIGN KEY (loser_id) REFERENCES players(player_id));
INSERT INTO players VALUES
  (200001, 'Martina', 'Hingis', 'R', '19800930', 'SUI'),
  (200003, 'Justine', 'Henin', 'R', '19820601', 'BEL'),
  (200033, 'Serena', 'Williams', 'R', '19810926', 'USA'),
  (200748, 'Venus', 'Williams', 'R', '19800617', 'USA'),
  (201320, 'Petra', 'Kvitova', 'L', '19900308', 'CZE'),
  (201474, 'Angelique', 'Kerber', 'L', '19880118', 'GER'),
  (201520, 'Ekaterina', 'Makarova', 'L', '19880607', 'RUS'),
  (202494, 'Sloane', 'Stephens', 'R', '19930320', 'USA');
INSERT INTO matches VALUES
  (1, 'WTA Championships', 2013, 201320, 'Petra Kvitova', 'L', 200033, 'Serena Williams', 'R'),
  (2, 'WTA Championships', 2013, 201474, 'Angelique Kerber', 'L', 201520, 'Ekaterina Makarova', 'L'),
  (3, 'WTA Championships', 2013, 200033, 'Serena Williams', 'R', 200748, 'Venus Williams', 'R'),
  (4, 'WTA Championships', 2016, 201320, 'Petra Kvitova', 'L', 202494, 'Sloane Stephens', 'R'),
  (5, 'Australian Open', 2016, 201474, 'Angelique Kerber', 'L', 200033, 'Serena Williams', 'R'),
  (6, 'Australian Open', 2016, 201520, 'Ekaterina Makarova', 'L', 200001, 'Martina Hingis', 'R'),
  (7, 'US Open', 2017, 202494, 'Sloane Stephens', 'R', 201320, 'Petra Kvitova', 'L'),
  (8, 'WTA Championships', 2016, 201520, 'Ekaterina Makarova', 'L', 201474, 'Angelique Kerber', 'L');
""",
}


def main():
    os.makedirs(OUT, exist_ok=True)
    for name, script in DATABASES.items():
        path = os.path.join(OUT, name + ".sqlite")
        if os.path.exists(path):
            os.remove(path)
        conn = sqlite3.connect(path)
        conn.executescript(script)
        conn.commit()
        conn.execute("VACUUM")
        conn.close()
        print("wrote", path)


if __name__ == "__main__":
    main()
