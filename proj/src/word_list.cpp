#include "fast/data_synth.hpp"

namespace fast {

// Common English words, 1 to 20 characters, used for source/target sampling.
const std::vector<std::string>& word_list()
{
    static const std::vector<std::string> words = {
        "a", "I", "an", "at", "be", "by", "do", "go", "he", "if", "in", "is", "it", "me", "my", "no", "of", "on",
        "or", "so", "to", "up", "us", "we", "act", "add", "age", "air", "all", "and", "any", "arm", "art", "ask",
        "bad", "bag", "bar", "bed", "big", "bit", "box", "boy", "bus", "but", "buy", "can", "car", "cat", "cup",
        "cut", "day", "dog", "dry", "ear", "eat", "egg", "end", "eye", "far", "few", "fit", "fix", "fly", "for",
        "fun", "gas", "get", "gun", "hat", "her", "him", "his", "hot", "how", "ice", "job", "key", "kid", "law",
        "leg", "let", "lie", "low", "man", "map", "may", "mix", "net", "new", "not", "now", "nut", "odd", "off",
        "oil", "old", "one", "our", "out", "own", "pay", "pen", "pet", "put", "red", "run", "sea", "see", "set",
        "sit", "sky", "son", "sun", "tax", "tea", "ten", "the", "top", "toy", "try", "two", "use", "war", "way",
        "who", "why", "win", "yes", "yet", "you", "able", "area", "army", "baby", "back", "ball", "band", "bank",
        "base", "bath", "bear", "beat", "bell", "best", "bill", "bird", "blue", "boat", "body", "bone", "book",
        "cafe", "call", "calm", "card", "care", "case", "cash", "city", "club", "coat", "code", "cold", "cook",
        "cool", "copy", "dark", "data", "date", "deal", "deep", "door", "down", "draw", "drop", "east", "easy",
        "edge", "exit", "face", "fact", "fair", "farm", "fast", "fire", "fish", "food", "foot", "form", "free",
        "game", "gate", "gift", "girl", "gold", "good", "hair", "hall", "hand", "hard", "head", "help", "hero",
        "high", "hill", "home", "hope", "hour", "idea", "iron", "jazz", "join", "jump", "keep", "kind", "king",
        "lake", "land", "last", "left", "life", "line", "lion", "list", "long", "love", "main", "mall", "menu",
        "milk", "mind", "moon", "name", "near", "news", "note", "open", "page", "park", "path", "play", "pool",
        "post", "rain", "read", "road", "rock", "room", "rule", "safe", "sale", "salt", "shop", "show", "side",
        "sign", "size", "snow", "soft", "song", "star", "stop", "taxi", "team", "text", "time", "tour", "town",
        "tree", "view", "wall", "west", "wind", "wine", "wolf", "word", "work", "yard", "zero", "zone", "about",
        "above", "apple", "beach", "black", "bread", "brown", "candy", "chair", "clean", "clock", "cloud", "coast",
        "cream", "dance", "drink", "earth", "eight", "empty", "enter", "field", "first", "floor", "fresh", "fruit",
        "glass", "grand", "green", "group", "happy", "heart", "horse", "hotel", "house", "light", "lucky", "magic",
        "metro", "money", "month", "motor", "mouse", "music", "night", "north", "ocean", "offer", "paint", "paper",
        "party", "peace", "phone", "piano", "pizza", "plant", "plaza", "power", "price", "queen", "quiet", "radio",
        "river", "royal", "salad", "sharp", "sheep", "shirt", "short", "sleep", "smile", "south", "space", "sport",
        "stone", "store", "sugar", "sweet", "table", "tiger", "train", "truck", "value", "water", "white", "world",
        "young", "animal", "artist", "autumn", "bakery", "banana", "basket", "bridge", "button", "camera", "castle",
        "center", "church", "coffee", "corner", "dinner", "doctor", "double", "dragon", "empire", "energy", "family",
        "flower", "forest", "friend", "garden", "ginger", "golden", "guitar", "hammer", "island", "jacket", "jungle",
        "ladder", "letter", "market", "mirror", "modern", "monkey", "museum", "nature", "office", "orange", "parade",
        "pepper", "pocket", "police", "public", "rabbit", "record", "repair", "rocket", "school", "screen", "silver",
        "simple", "spring", "square", "street", "studio", "summer", "sunset", "ticket", "tomato", "travel", "tunnel",
        "velvet", "window", "winter", "yellow", "airport", "balance", "battery", "bicycle", "brother", "cabinet",
        "capital", "central", "chicken", "circuit", "classic", "company", "concert", "country", "crystal", "culture",
        "digital", "dolphin", "element", "evening", "express", "factory", "fashion", "freedom", "gallery", "general",
        "harvest", "history", "holiday", "kitchen", "library", "machine", "morning", "mystery", "natural", "network",
        "parking", "pattern", "pharmacy", "picture", "station", "victory", "village", "weather", "wedding", "welcome",
        "avenue", "bookshop", "bulletin", "business", "calendar", "champion", "chemical", "children", "chocolate",
        "computer", "delivery", "diamond", "discount", "electric", "emergency", "entrance", "festival", "football",
        "hospital", "industry", "language", "magazine", "mountain", "national", "painting", "question", "railway",
        "sandwich", "shopping", "standard", "strategy", "sunshine", "terminal", "treasure", "umbrella", "vacation",
        "adventure", "apartment", "breakfast", "celebrate", "character", "community", "dangerous", "education",
        "furniture", "interview", "landscape", "marketing", "necessary", "newspaper", "orchestra", "passenger",
        "restaurant", "supermarket", "television", "university", "background", "basketball", "connection",
        "decoration", "department", "experience", "helicopter", "impossible", "laboratory", "management",
        "photograph", "technology", "temperature", "underground", "unfortunately", "communication",
        "entertainment", "international", "transportation", "responsibilities", "characterization",
        "internationalization",
    };
    return words;
}

} // namespace fast
