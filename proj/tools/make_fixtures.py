#!/usr/bin/env python3
"""Writes the fixture corpora, query page, calibration texts and the toy
embedding table under data/fixtures.

    python3 tools/make_fixtures.py

Output is deterministic; rerun after editing the articles below.
"""

import hashlib
import html
import json
import pathlib
import random
import re

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "fixtures"
DIM = 32

SOURCES = [
    ("ap", "Associated Press"),
    ("bbc", "BBC News"),
    ("cnn", "CNN"),
    ("guardian", "The Guardian"),
    ("npr", "NPR"),
    ("reuters", "Reuters"),
]

QUERY = {
    "url": "https://dailyviral.example/2016/05/27/gatorade-water-ads",
    "source_id": "demo",
    "published_at": "2016-05-27T15:20:00-07:00",
    "title": "Gatorade settles claims that its ads disparaged water",
    "body": [
        "Sports drink maker Gatorade has agreed to pay $300,000 to settle claims that it disparaged water "
        "in a mobile video game, the California attorney general announced on Thursday.",
        "The game featured the sprinter Usain Bolt and asked players to avoid water droplets that slowed the "
        "athlete down, while collecting Gatorade boosted his performance. The attorney general said the company "
        "misled young people about the health benefits of drinking water.",
        "Under the settlement Gatorade will not make misleading statements about water in its advertising and "
        "will disclose paid endorsements on social media. The company, owned by PepsiCo, will also fund a "
        "public health campaign on nutrition and exercise for children.",
        "Gatorade said it was pleased to resolve the matter and that the game had been taken down in 2013.",
    ],
}

NEAR_DUPLICATE = (
    "cnn", "gatorade-settlement-water-game", "2016-05-26",
    "Gatorade settles with California over game that disparaged water",
    [
        "Gatorade will pay $300,000 to settle claims that a mobile video game disparaged water, California "
        "attorney general Kamala Harris announced Thursday.",
        "In the game, sprinter Usain Bolt collected Gatorade to boost his performance and avoided water "
        "droplets that slowed the athlete down. Harris said the game misled young people about the health "
        "benefits of water.",
        "As part of the settlement, the PepsiCo-owned company will not make misleading statements about water "
        "in its advertising, will disclose paid endorsements on social media and will fund a public health "
        "campaign on nutrition and exercise for children.",
        "Gatorade said in a statement it was pleased to resolve the matter. The game was taken down in 2013.",
    ],
)

# (source, slug, date, title, paragraphs)
ARTICLES = [
    # ap
    ("ap", "california-drought-rules-eased", "2016-05-25", "California eases drought rules as water supplies recover",
     ["California regulators voted to relax mandatory water conservation targets after a wet winter refilled "
      "reservoirs in the north of the state.",
      "Local water districts can now set their own savings goals based on supply. Officials warned the drought "
      "is not over in the south, where groundwater remains depleted."]),
    ("ap", "philadelphia-soda-tax-debate", "2016-05-24", "Philadelphia council nears vote on soda tax",
     ["Philadelphia lawmakers moved closer to a tax on sugary drinks that would fund prekindergarten programs.",
      "The beverage industry has spent millions on advertising against the proposal, arguing it would hurt "
      "small grocers. Diet sodas and sports drinks would also be covered."]),
    ("ap", "bolt-jamaica-trials-plan", "2016-05-28", "Bolt confident ahead of Jamaican Olympic trials",
     ["Usain Bolt said his hamstring is healthy and that he expects to defend his 100 meter title in Rio.",
      "The sprinter ran 9.88 seconds in Ostrava and plans two more races before the Jamaican trials."]),
    ("ap", "flint-pipes-replacement", "2016-05-22", "Flint begins replacing lead pipes as residents wait",
     ["Crews in Flint, Michigan dug up the first lead service lines as part of a plan to replace thousands of "
      "pipes that contaminated drinking water.",
      "Residents still rely on bottled water and filters. State officials said testing shows lead levels are "
      "falling but urged caution for children and pregnant women."]),
    ("ap", "airline-delays-security-lines", "2016-05-26", "Long security lines snarl airports before holiday",
     ["Travelers faced waits of more than an hour at checkpoints in Chicago and Atlanta as the Memorial Day "
      "weekend began.",
      "The Transportation Security Administration said it is adding officers and overtime hours to shorten "
      "lines during the summer."]),
    ("ap", "pepsico-earnings-april", "2016-04-20", "PepsiCo profit beats forecasts on snack sales",
     ["PepsiCo reported higher quarterly profit as strong sales of snacks offset weaker demand for soda in North "
      "America.",
      "The company said Gatorade volumes grew and it expects currency swings to weigh on results this year."]),
    ("ap", "stock-market-oil-rally", "2016-05-31", "Stocks edge higher as oil nears fifty dollars",
     ["Energy companies led a modest rally on Wall Street as crude oil prices climbed toward fifty dollars a "
      "barrel for the first time this year.",
      "Investors are watching for signals on interest rates from the Federal Reserve in June."]),
    ("ap", "school-lunch-sugar-rules", "2016-05-23", "Schools weigh new limits on sugary snacks and drinks",
     ["New federal rules will restrict advertising of sugary drinks in schools and limit snacks sold during "
      "the day.",
      "Nutrition advocates said the changes will help children make healthier choices, while some districts "
      "worry about lost revenue from vending machines."]),
    ("ap", "wildfire-canada-fort-mcmurray", "2016-05-21", "Fort McMurray residents prepare to return after wildfire",
     ["Officials in Alberta said residents could begin returning to Fort McMurray next month after a wildfire "
      "destroyed about 2,400 homes.",
      "The city's water supply is not yet safe to drink and residents will be told to boil water for several "
      "weeks."]),
    ("ap", "nba-warriors-thunder-game", "2016-05-29", "Warriors force game seven against Thunder",
     ["Klay Thompson made eleven three pointers as Golden State rallied to beat Oklahoma City and force a "
      "deciding game in the Western Conference finals.",
      "The Warriors trailed by eight points entering the fourth quarter before Thompson's shooting turned the "
      "game."]),

    # bbc
    ("bbc", "sugar-tax-uk-industry", "2016-05-25", "Drinks industry attacks UK sugar levy",
     ["Soft drink makers said the planned levy on sugary drinks would cost jobs and do little to reduce obesity.",
      "Health campaigners welcomed the tax and said manufacturers should reformulate drinks to cut sugar. Pure "
      "fruit juices and milk based drinks will be exempt."]),
    ("bbc", "india-heatwave-water-shortage", "2016-05-20", "India heatwave deepens water shortages",
     ["Temperatures above 50C in Rajasthan have worsened a water crisis affecting millions of people across "
      "India.",
      "Trains have carried water to drought hit villages in Maharashtra, and officials have banned the use of "
      "water for construction in some towns."]),
    ("bbc", "bolt-olympic-preparations", "2016-05-27", "Usain Bolt eyes triple triple in Rio",
     ["Usain Bolt says he wants to win the 100m, 200m and relay at a third consecutive Olympics before he "
      "retires.",
      "The Jamaican sprinter has been troubled by injuries but says his training in Kingston is going well."]),
    ("bbc", "eu-referendum-economy-warning", "2016-05-23", "Treasury warns of recession after Brexit vote",
     ["The Treasury has said the UK would fall into recession if voters choose to leave the European Union.",
      "Leave campaigners dismissed the analysis as scaremongering and accused the chancellor of exaggerating "
      "the risks."]),
    ("bbc", "childhood-obesity-advertising", "2016-05-26", "Doctors call for ban on junk food adverts for children",
     ["Senior doctors have called for a ban on advertising of food and drinks high in sugar before the 9pm "
      "watershed.",
      "They say children see thousands of adverts for unhealthy products every year, including through mobile "
      "games and social media."]),
    ("bbc", "egyptair-search-black-box", "2016-05-30", "EgyptAir crash search detects black box signal",
     ["A French navy ship has detected signals from one of the flight recorders of the EgyptAir plane that "
      "crashed into the Mediterranean.",
      "Investigators hope the recorders will explain why the aircraft disappeared from radar on its way from "
      "Paris to Cairo."]),
    ("bbc", "champions-league-final-madrid", "2016-05-28", "Real Madrid win Champions League on penalties",
     ["Real Madrid beat Atletico Madrid on penalties to win the Champions League for the eleventh time.",
      "Cristiano Ronaldo scored the decisive kick in Milan after the game finished 1-1 after extra time."]),
    ("bbc", "bottled-water-plastic-waste", "2016-05-24", "Bottled water boom fuels plastic waste concern",
     ["Sales of bottled water have overtaken fizzy drinks in several countries, raising concern about plastic "
      "waste.",
      "Campaigners want deposit schemes for bottles and more public drinking water fountains in city centres."]),
    ("bbc", "tata-steel-sale-bidders", "2016-05-31", "Tata Steel shortlists bidders for UK plants",
     ["Tata Steel has drawn up a shortlist of bidders for its UK business, including the Port Talbot plant.",
      "Unions said thousands of jobs depend on a sale being agreed before the summer."]),
    ("bbc", "sports-drinks-dentists-warning", "2016-03-10", "Dentists warn teenagers over sports drinks",
     ["Dentists say teenagers who drink sports drinks every day risk damaging their teeth.",
      "A survey found many young people believe the drinks are healthy and drink them while playing video "
      "games rather than exercising."]),

    # cnn
    ("cnn", "flint-water-crisis-hearing", "2016-05-25", "Flint water crisis: lawmakers grill EPA officials",
     ["Members of Congress questioned federal environmental officials over delays in warning Flint residents "
      "about lead in their drinking water.",
      "The EPA administrator said the agency should have acted sooner and promised stronger oversight of state "
      "water regulators."]),
    ("cnn", "kamala-harris-senate-debate", "2016-05-30", "Harris and Sanchez meet in Senate debate",
     ["California attorney general Kamala Harris and congresswoman Loretta Sanchez clashed over immigration "
      "and criminal justice in a televised debate.",
      "Both Democrats are competing in the June primary for the seat held by retiring senator Barbara Boxer."]),
    ("cnn", "pokemon-mobile-games-kids", "2016-05-26", "How much mobile gaming is too much for kids?",
     ["Pediatricians say screen time limits should apply to mobile games just as they do to television.",
      "Parents are advised to look for in-app purchases and advertising aimed at children when choosing a "
      "game."]),
    ("cnn", "trump-delegates-nomination", "2016-05-27", "Trump clinches delegates needed for nomination",
     ["Donald Trump has secured the number of delegates needed to win the Republican presidential nomination.",
      "The milestone comes after several unpledged delegates from North Dakota said they would support him at "
      "the convention."]),
    ("cnn", "energy-drinks-heart-study", "2016-05-22", "Energy drinks may raise heart risks, study finds",
     ["Drinking energy drinks changes heart rhythm and raises blood pressure more than caffeine alone, "
      "researchers reported.",
      "The small study compared an energy drink with a caffeinated control drink among healthy young adults."]),
    ("cnn", "gorilla-zoo-cincinnati", "2016-05-31", "Cincinnati Zoo defends killing gorilla after boy falls in",
     ["The director of the Cincinnati Zoo said shooting Harambe was the right decision after a four year old "
      "boy fell into the gorilla enclosure.",
      "Animal rights activists criticized the zoo and questioned whether the parents should be held "
      "responsible."]),
    ("cnn", "memorial-day-travel-record", "2016-05-26", "Record crowds expected for Memorial Day travel",
     ["More than 38 million Americans are expected to travel over the holiday weekend, the most in over a "
      "decade.",
      "Low gas prices are encouraging road trips even as airports struggle with long security lines."]),
    ("cnn", "nba-finals-preview", "2016-05-29", "Cavaliers wait for Western champion as finals near",
     ["LeBron James and the Cleveland Cavaliers are resting ahead of the NBA finals while Golden State and "
      "Oklahoma City play a deciding game.",
      "Cleveland swept through the Eastern Conference playoffs with only two losses."]),
    ("cnn", "coca-cola-sugar-reduction", "2016-05-24", "Coca-Cola pledges to cut sugar in drinks",
     ["Coca-Cola said it will reduce sugar in many of its drinks and sell more smaller cans as consumers turn "
      "away from soda.",
      "Critics said the company still spends heavily on advertising sugary drinks to young people."]),
    ("cnn", "climate-heat-record-april", "2016-05-18", "April was hottest on record, NASA says",
     ["Global temperatures in April broke records for the seventh month in a row, according to NASA data.",
      "Scientists said the strong El Nino and long term warming combined to drive the record heat."]),

    # guardian
    ("guardian", "brita-filter-marketing", "2016-05-25", "Water filter adverts banned over misleading claims",
     ["The advertising watchdog has banned adverts for a water filter that suggested tap water was unsafe to "
      "drink.",
      "The regulator said the claims were misleading and could cause unnecessary concern about public water "
      "supplies."]),
    ("guardian", "glastonbury-weather-forecast", "2016-05-29", "Glastonbury organisers prepare for muddy festival",
     ["Forecasters expect heavy rain in Somerset in the weeks before the festival, raising fears of a repeat of "
      "muddy years.",
      "Organisers said extra tracks have been laid across the site."]),
    ("guardian", "fitness-apps-children", "2016-05-26", "Fitness games fail to get children moving, study says",
     ["Video games designed to encourage exercise do little to increase children's activity, a review of "
      "studies has found.",
      "Researchers said outdoor play and school sport remain the most effective ways to improve fitness."]),
    ("guardian", "bolt-hamstring-doubts", "2016-05-30", "Bolt's hamstring raises doubts before trials",
     ["Usain Bolt's coach says the sprinter will be fit for the Olympics despite tightness in his hamstring.",
      "Bolt withdrew from a meeting in Kingston as a precaution and will run in Ostrava instead."]),
    ("guardian", "nestle-water-extraction-california", "2016-05-21",
     "Nestlé pumps water from California forest during drought",
     ["Nestlé continues to pipe millions of gallons of water out of the San Bernardino national forest to "
      "bottle and sell, despite the drought.",
      "Environmental groups say the company's permit expired decades ago and have asked the forest service to "
      "halt the pumping."]),
    ("guardian", "uk-housing-crisis-rents", "2016-05-24", "Rents rise faster than wages in English cities",
     ["Private rents in most English cities have risen faster than earnings over the past five years, a report "
      "has found.",
      "Housing charities are calling for longer tenancies and limits on rent increases."]),
    ("guardian", "sugar-industry-research-funding", "2016-05-22", "Sugar industry funded research on health effects",
     ["Documents show the sugar industry paid for research that played down links between sugar and heart "
      "disease.",
      "Public health experts said the findings raise questions about industry funding of nutrition science."]),
    ("guardian", "venezuela-food-shortages", "2016-05-28", "Venezuelans queue for hours amid food shortages",
     ["Long queues have formed outside supermarkets in Caracas as shortages of basic food and medicine worsen.",
      "The government blames an economic war waged by its opponents while critics point to price controls."]),
    ("guardian", "athletes-sponsorship-social-media", "2016-05-27",
     "Athletes must disclose paid posts, advertising regulator says",
     ["Sports stars who promote brands on social media must make clear when posts are paid endorsements, the "
      "advertising regulator has said.",
      "The guidance follows complaints about athletes posting about drinks and sportswear without disclosure."]),
    ("guardian", "euro-2016-squad-announced", "2016-05-16", "England name squad for Euro 2016",
     ["Roy Hodgson has named his 23 man squad for the European championship in France.",
      "The manager left out several experienced players in favour of young forwards."]),

    # npr
    ("npr", "kids-sports-drinks-consumption", "2016-05-24", "Kids are drinking more sports drinks than ever",
     ["A new survey finds more teenagers drink sports drinks every week, often when they are not exercising.",
      "Nutritionists say water is the best choice for most children and that the drinks add unneeded sugar."]),
    ("npr", "california-groundwater-sinking", "2016-05-20", "California land sinks as farmers pump groundwater",
     ["Parts of the Central Valley are sinking by nearly two feet a year as farmers pump groundwater to survive "
      "the drought.",
      "The subsidence is damaging canals that carry water to millions of people."]),
    ("npr", "rio-zika-athletes-concern", "2016-05-28", "Doctors urge Olympics delay over Zika",
     ["More than one hundred health experts signed a letter asking that the Rio Olympics be postponed or moved "
      "because of the Zika outbreak.",
      "The World Health Organization said cancelling the games would not significantly change the spread of "
      "the virus."]),
    ("npr", "prince-death-investigation", "2016-05-26", "Investigators look at painkillers in Prince's death",
     ["Authorities in Minnesota are investigating whether Prince died of an overdose of opioid painkillers.",
      "A doctor who treated the musician is cooperating with investigators."]),
    ("npr", "food-labels-added-sugar", "2016-05-20", "New nutrition labels will list added sugar",
     ["The FDA announced the first major update to nutrition labels in two decades, including a line for "
      "added sugar.",
      "The labels will also show calories in larger type and use serving sizes closer to what people eat."]),
    ("npr", "video-games-learning", "2016-05-27", "Can video games teach kids science?",
     ["Teachers in several states are using video games to teach physics and biology, and some early results "
      "are promising.",
      "Researchers caution that games work best alongside hands on experiments in the classroom."]),
    ("npr", "student-debt-graduates", "2016-05-25", "Class of 2016 graduates with record student debt",
     ["The average graduate this year owes more than thirty seven thousand dollars in student loans.",
      "Economists say the debt is delaying home buying and small business formation among young adults."]),
    ("npr", "drought-texas-ends", "2016-04-28", "Texas drought officially over after spring rains",
     ["For the first time in six years no part of Texas is in drought, after heavy spring rains filled lakes "
      "and reservoirs.",
      "Water managers warned that conservation remains important because the next drought could come quickly."]),
    ("npr", "marathon-hydration-advice", "2016-05-23", "Runners may be drinking too much during races",
     ["Sports medicine doctors say drinking too much water or sports drinks during a marathon can be dangerous.",
      "They advise runners to drink when they are thirsty rather than following a fixed schedule."]),
    ("npr", "bees-colony-losses", "2016-05-31", "Beekeepers lost almost half their colonies last year",
     ["Beekeepers in the United States lost forty four percent of their honeybee colonies over the past year.",
      "Scientists blame mites, pesticides and poor nutrition for the losses."]),

    # reuters
    ("reuters", "pepsico-gatorade-marketing", "2016-05-23", "PepsiCo steps up Gatorade marketing to athletes",
     ["PepsiCo is expanding Gatorade sponsorship deals with college teams and professional athletes as it "
      "tries to defend its share of the sports drink market.",
      "The company is also launching lower sugar versions of its drinks."]),
    ("reuters", "oil-prices-opec-meeting", "2016-05-30", "Oil steady ahead of OPEC meeting",
     ["Oil prices were little changed as traders waited for an OPEC meeting in Vienna that is not expected to "
      "agree output limits.",
      "Saudi Arabia and Iran remain divided over production policy."]),
    ("reuters", "water-utility-merger", "2016-05-26", "American Water agrees to buy Pennsylvania utility",
     ["American Water Works said it will acquire a small Pennsylvania water utility as it expands its "
      "regulated business.",
      "The company expects the deal to close later this year, pending approval by state regulators."]),
    ("reuters", "obama-hiroshima-visit", "2016-05-27", "Obama visits Hiroshima, calls for world without nuclear arms",
     ["Barack Obama became the first sitting U.S. president to visit Hiroshima, laying a wreath at the memorial "
      "to the victims of the atomic bombing.",
      "He did not apologise but said the world must pursue an end to nuclear weapons."]),
    ("reuters", "california-attorney-general-settlements", "2016-05-20",
     "California attorney general reaches settlement with lender",
     ["The California attorney general announced a settlement with an online lender accused of charging "
      "illegal interest rates.",
      "The company will pay restitution to borrowers and change its advertising."]),
    ("reuters", "soda-sales-decline", "2016-05-25", "U.S. soda sales fall for eleventh straight year",
     ["Carbonated soft drink volumes in the United States fell again last year as consumers switched to "
      "bottled water and other drinks.",
      "Bottled water is on track to overtake soda as the largest beverage category by volume."]),
    ("reuters", "fed-rate-hike-signals", "2016-05-27", "Yellen says rate rise may be appropriate in coming months",
     ["Federal Reserve chair Janet Yellen said an interest rate increase would probably be appropriate in the "
      "coming months if the economy continues to improve.",
      "Markets raised bets on a move in June or July."]),
    ("reuters", "apple-iphone-sales-china", "2016-05-24", "Apple faces slowing iPhone demand in China",
     ["Apple is struggling to revive iPhone sales in China as local brands offer cheaper phones with similar "
      "features.",
      "Analysts expect the company to report a second consecutive quarter of falling revenue."]),
    ("reuters", "usain-bolt-sponsor-puma", "2016-05-29", "Puma to keep Bolt as ambassador after retirement",
     ["Sportswear maker Puma said Usain Bolt will remain a brand ambassador after the sprinter retires from "
      "competition.",
      "The Jamaican has been sponsored by Puma since he was a teenager."]),
    ("reuters", "fitbit-shares-fall", "2016-05-05", "Fitbit shares fall on weak forecast",
     ["Fitbit shares fell after the company forecast lower than expected revenue for the current quarter.",
      "The fitness tracker maker faces competition from smartwatches."]),
]

# Two reports of the same event count as related.
CALIBRATION_STORIES = [
    ("volkswagen",
     "Volkswagen agrees to pay billions to settle emissions claims in the United States. The carmaker will buy "
     "back diesel cars fitted with software that cheated pollution tests and fund clean air programs.",
     "Volkswagen will spend billions of dollars to settle U.S. claims over its emissions cheating. Owners of "
     "diesel cars with software that cheated pollution tests can sell them back, and the company will pay for "
     "clean air programs."),
    ("zika",
     "Health officials confirmed the first local Zika infections in Florida, saying mosquitoes spread the virus "
     "in a Miami neighborhood. Pregnant women were told to avoid the area.",
     "Mosquitoes in a Miami neighborhood are spreading Zika, Florida health officials said, confirming the first "
     "local infections. Officials advised pregnant women to avoid travel to the area."),
    ("brexit",
     "Britain voted to leave the European Union, sending the pound to its lowest level in decades. Prime "
     "minister David Cameron said he would resign.",
     "The pound fell to a decades low after British voters chose to leave the European Union. David Cameron "
     "announced he will step down as prime minister."),
    ("juno",
     "NASA's Juno spacecraft entered orbit around Jupiter after a five year journey. Scientists hope to learn how "
     "the giant planet formed.",
     "After five years in space, the Juno probe reached orbit around Jupiter, NASA said. The mission will study "
     "how the largest planet formed."),
]
UNRELATED_PAIRS = [("volkswagen", 0, "zika", 1), ("brexit", 0, "juno", 1), ("zika", 0, "brexit", 1),
                   ("juno", 0, "volkswagen", 1)]

TOKEN = re.compile(r"[^\W_]+")


def tokens(text):
    return [t.lower() for t in TOKEN.findall(text)]


def entry(source, slug, date, title, paragraphs):
    return {
        "url": f"https://{source}.example/{date[:4]}/{date[5:7]}/{date[8:10]}/{slug}",
        "source_id": source,
        "title": title,
        "body": "\n\n".join(paragraphs),
        "published_at": date,
    }


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def query_page():
    q = QUERY
    paras = "\n".join(f"      <p>{html.escape(p)}</p>" for p in q["body"])
    return f"""<!DOCTYPE html>
<html lang="en">
<head>
  <meta charset="utf-8">
  <title>{html.escape(q["title"])} | Daily Viral</title>
  <meta property="og:title" content="{html.escape(q["title"])}">
  <meta property="article:published_time" content="{q["published_at"]}">
  <meta name="author" content="Staff Writer">
  <script>window.dataLayer = [{{"page": "article", "section": "business"}}];</script>
  <style>.share {{ float: right; }}</style>
</head>
<body>
  <nav><ul><li><a href="/">Home</a></li><li><a href="/news">News</a></li><li><a href="/sport">Sport</a></li></ul>
    <p>Sign up for our newsletter and get the most shared stories of the day in your inbox every morning.</p></nav>
  <main>
    <article>
      <h1>{html.escape(q["title"])}</h1>
      <div class="byline">By Staff Writer, <time datetime="{q["published_at"]}">May 27, 2016</time></div>
{paras}
    </article>
    <aside class="related"><h3>Trending</h3><p>Ten celebrity diets you will not believe.</p></aside>
  </main>
  <footer><p>Copyright 2016 Daily Viral. All rights reserved. Terms of use and privacy policy apply.</p></footer>
</body>
</html>
"""


def vector(token):
    seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "little")
    rng = random.Random(seed)
    v = [rng.gauss(0.0, 1.0) for _ in range(DIM)]
    norm = sum(x * x for x in v) ** 0.5
    return [x / norm for x in v]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rows = [entry(*a) for a in ARTICLES]
    near = entry(*NEAR_DUPLICATE)
    query_row = {
        "url": QUERY["url"], "source_id": QUERY["source_id"], "title": QUERY["title"],
        "body": "\n\n".join(QUERY["body"]), "published_at": QUERY["published_at"][:10],
    }
    counts = {}
    for r in rows:
        counts[r["source_id"]] = counts.get(r["source_id"], 0) + 1
    assert all(counts[s] == 10 for s, _ in SOURCES), counts

    # The query article is listed under a source outside the registry so the
    # fixture client can serve its page by url.
    write_jsonl(OUT / "corpus.jsonl", sorted(rows + [near, query_row], key=lambda r: r["url"]))
    write_jsonl(OUT / "corpus_unrelated.jsonl", sorted(rows + [query_row], key=lambda r: r["url"]))
    (OUT / "gatorade.html").write_text(query_page(), encoding="utf-8")

    cal = OUT / "calibration"
    cal.mkdir(exist_ok=True)
    pairs = []
    for name, first, second in CALIBRATION_STORIES:
        (cal / f"{name}_0.txt").write_text(first + "\n", encoding="utf-8")
        (cal / f"{name}_1.txt").write_text(second + "\n", encoding="utf-8")
        pairs.append({"a_path": f"calibration/{name}_0.txt", "b_path": f"calibration/{name}_1.txt", "related": True})
    for a, ai, b, bi in UNRELATED_PAIRS:
        pairs.append({"a_path": f"calibration/{a}_{ai}.txt", "b_path": f"calibration/{b}_{bi}.txt", "related": False})
    # A near-duplicate story and its source, plus two corpus articles that
    # share keywords with it but report something else.
    (cal / "gatorade_query.txt").write_text(QUERY["title"] + "\n" + "\n\n".join(QUERY["body"]) + "\n", encoding="utf-8")
    (cal / "gatorade_cnn.txt").write_text(NEAR_DUPLICATE[3] + "\n" + "\n\n".join(NEAR_DUPLICATE[4]) + "\n",
                                          encoding="utf-8")
    for a in ARTICLES:
        if a[1] in ("kids-sports-drinks-consumption", "brita-filter-marketing"):
            (cal / f"{a[1]}.txt").write_text(a[3] + "\n" + "\n\n".join(a[4]) + "\n", encoding="utf-8")
    pairs.append({"a_path": "calibration/gatorade_query.txt", "b_path": "calibration/gatorade_cnn.txt", "related": True})
    pairs.append({"a_path": "calibration/gatorade_query.txt", "b_path": "calibration/kids-sports-drinks-consumption.txt",
                  "related": False})
    pairs.append({"a_path": "calibration/gatorade_query.txt", "b_path": "calibration/brita-filter-marketing.txt",
                  "related": False})
    write_jsonl(OUT / "calibration_pairs.jsonl", pairs)

    vocab = set()
    for r in rows + [near, query_row]:
        vocab.update(tokens(r["title"] + "\n" + r["body"]))
    for _, first, second in CALIBRATION_STORIES:
        vocab.update(tokens(first + " " + second))
    vocab.update(tokens(query_page()))
    with open(OUT / "embeddings.txt", "w", encoding="utf-8") as f:
        f.write(f"{len(vocab)} {DIM}\n")
        for t in sorted(vocab):
            f.write(t + " " + " ".join(f"{x:.6f}" for x in vector(t)) + "\n")


if __name__ == "__main__":
    main()
